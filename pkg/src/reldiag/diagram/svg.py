"""Deterministic SVG rendering.

Layout: union cells side by side; inside a partition its tables sit in one row (the
output table first in the root) and child negation boxes are stacked below. Edges
are straight lines between row sides with the operator at the midpoint; arrows are
redrawn with the flipped operator whenever they would point from right to left.
"""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from ..model import CompOp, format_value
from .model import Cell, Diagram, Partition, RowRef, TableBox
from .validate import require_valid

CHAR_W = 8
ROW_H = 20
HEAD_H = 22
TABLE_GAP = 48
PAD = 16
CELL_GAP = 40
FONT = "font-family=\"monospace\" font-size=\"13\""

_SYMBOL = {CompOp.EQ: "=", CompOp.NEQ: "≠", CompOp.LT: "<", CompOp.LEQ: "≤",
           CompOp.GT: ">", CompOp.GEQ: "≥"}


def _row_label(row) -> str:
    if row.op is None:
        return row.attr
    return f"{row.attr}{_SYMBOL[row.op]}{format_value(row.value)}"


def _table_size(header: str, labels: list[str]) -> tuple[int, int]:
    w = max(len(s) for s in [header] + labels) * CHAR_W + 2 * 8
    return max(w, 40), HEAD_H + ROW_H * len(labels)


@dataclass
class _Box:
    id: str
    header: str
    labels: list
    kind: str  # "table" or "output"
    x: int = 0
    y: int = 0
    w: int = 0
    h: int = 0


class _Layout:
    def __init__(self):
        self.boxes: dict[str, _Box] = {}
        self.parts: list[tuple[int, int, int, int]] = []
        self.out = []

    def size(self, p: Partition, extra: list) -> tuple[int, int]:
        items = extra + [_Box(t.id, t.relation, [_row_label(r) for r in t.rows], "table") for t in p.tables]
        row_w = row_h = 0
        for b in items:
            b.w, b.h = _table_size(b.header, b.labels)
            row_w += b.w + (TABLE_GAP if row_w else 0)
            row_h = max(row_h, b.h)
        child_sizes = [self.size(c, []) for c in p.children]
        w = max([row_w] + [cw + 2 * PAD for cw, _ in child_sizes])
        h = row_h
        for _, ch in child_sizes:
            h += (PAD if h else 0) + ch + 2 * PAD
        self._cache[id(p)] = (items, child_sizes, w, h)
        return w, h

    def place(self, p: Partition, x: int, y: int) -> None:
        items, child_sizes, w, h = self._cache[id(p)]
        cx = x
        row_h = 0
        for b in items:
            b.x, b.y = cx, y
            self.boxes[b.id if b.kind == "table" else "$output"] = b
            cx += b.w + TABLE_GAP
            row_h = max(row_h, b.h)
        cy = y + row_h + (PAD if row_h else 0)
        for c, (cw, ch) in zip(p.children, child_sizes):
            self.parts.append((x, cy, cw + 2 * PAD, ch + 2 * PAD))
            self.place(c, x + PAD, cy + PAD)
            cy += ch + 2 * PAD + PAD

    def cell(self, cell: Cell, x: int, y: int) -> tuple[int, int]:
        self._cache = {}
        extra = []
        if cell.output is not None:
            extra.append(_Box("$output", cell.output.name, list(cell.output.attrs), "output"))
        w, h = self.size(cell.root, extra)
        self.place(cell.root, x, y)
        return w, h


def _anchor(box: _Box, row: int, toward_x: float) -> tuple[int, int]:
    y = box.y + HEAD_H + ROW_H * row + ROW_H // 2
    if toward_x >= box.x + box.w / 2:
        return box.x + box.w, y
    return box.x, y


def _text(x, y, s, fill="black", anchor="start", weight=None) -> str:
    extra = f" font-weight=\"{weight}\"" if weight else ""
    return (f"<text x=\"{x}\" y=\"{y}\" {FONT} fill=\"{fill}\" text-anchor=\"{anchor}\"{extra}>"
            f"{escape(s)}</text>")


def _draw_box(b: _Box, lines: list) -> None:
    head = "#000000" if b.kind == "table" else "#808080"
    lines.append(f"<rect x=\"{b.x}\" y=\"{b.y}\" width=\"{b.w}\" height=\"{HEAD_H}\" fill=\"{head}\" "
                 f"stroke=\"#000000\"/>")
    lines.append(_text(b.x + 8, b.y + 16, b.header, fill="#ffffff", weight="bold"))
    for i, label in enumerate(b.labels):
        y = b.y + HEAD_H + ROW_H * i
        lines.append(f"<rect x=\"{b.x}\" y=\"{y}\" width=\"{b.w}\" height=\"{ROW_H}\" fill=\"#ffffff\" "
                     f"stroke=\"#000000\"/>")
        lines.append(_text(b.x + 8, y + 15, label))


def _edge(lay: _Layout, a: RowRef, b: RowRef, op: CompOp, directed: bool, lines: list,
          source_box=None) -> None:
    ba = source_box or lay.boxes[a.table]
    bb = lay.boxes[b.table]
    ra, rb = a.row, b.row
    if directed and bb.x + bb.w / 2 < ba.x + ba.w / 2:
        # never point from right to left: swap ends and flip the operator
        ba, bb, ra, rb, op = bb, ba, rb, ra, op.flip()
    x1, y1 = _anchor(ba, ra, bb.x + bb.w / 2)
    x2, y2 = _anchor(bb, rb, ba.x + ba.w / 2)
    if x1 == x2 and ba is not bb and ba.x == bb.x:
        x1 = x2 = ba.x + ba.w  # stacked boxes: connect on the right side
    marker = " marker-end=\"url(#arrow)\"" if directed else ""
    lines.append(f"<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#000000\" "
                 f"stroke-width=\"1.5\"{marker}/>")
    if op is not CompOp.EQ:
        mx, my = (x1 + x2) // 2, (y1 + y2) // 2 - 4
        lines.append(_text(mx, my, _SYMBOL[op], anchor="middle", weight="bold"))


def emit_svg(d: Diagram) -> str:
    require_valid(d)
    cell_lines: list[str] = []
    x = PAD
    height = 0
    for cell in d.cells:
        lay = _Layout()
        w, h = lay.cell(cell, x, PAD)
        height = max(height, h)
        lines: list[str] = []
        for (px, py, pw, ph) in lay.parts:
            lines.append(f"<rect x=\"{px}\" y=\"{py}\" width=\"{pw}\" height=\"{ph}\" rx=\"12\" ry=\"12\" "
                         f"fill=\"none\" stroke=\"#000000\" stroke-dasharray=\"6 4\"/>")
        for b in lay.boxes.values():
            _draw_box(b, lines)
        for e in cell.edges:
            _edge(lay, e.source, e.target, e.op, e.directed, lines)
        if cell.output is not None:
            out_box = lay.boxes["$output"]
            for i, ref in enumerate(cell.output.links):
                _edge(lay, RowRef("$output", i), ref, CompOp.EQ, False, lines, source_box=out_box)
        cell_lines.extend(lines)
        x += w + CELL_GAP
    width = x - CELL_GAP + PAD
    height += 2 * PAD
    head = [
        f"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" "
        f"viewBox=\"0 0 {width} {height}\">",
        "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"8\" "
        "markerHeight=\"8\" orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 z\"/></marker></defs>",
    ]
    return "\n".join(head + cell_lines + ["</svg>"]) + "\n"
