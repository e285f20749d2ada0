"""The six validity conditions for diagrams.

1. negation boxes form a tree (no box is claimed twice);
2. every table and its rows sit in exactly one partition and are readable;
3. every leaf partition holds at least one table;
4. joins connect tables in the same partition or along an ancestor chain, and
   asymmetric operators are drawn as arrows;
5. the output box has attributes, each linked to exactly one row of a root table;
6. all union cells share the output name and attribute set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import ValidityError
from ..model import CompOp, Schema
from .model import QUERY, SENTENCE, Cell, Diagram, Partition, RowRef

ASYMMETRIC = (CompOp.LT, CompOp.LEQ, CompOp.GT, CompOp.GEQ)


@dataclass(frozen=True)
class DiagramViolation:
    condition: int
    element: str
    message: str

    def __str__(self) -> str:
        return f"({self.condition}) {self.element}: {self.message}"

    def to_json(self) -> dict:
        return {"condition": self.condition, "element": self.element, "message": self.message}


def _cell_violations(cell: Cell, prefix: str, mode: str, schema: Optional[Schema]) -> list[DiagramViolation]:
    out: list[DiagramViolation] = []

    def add(cond, element, message):
        out.append(DiagramViolation(cond, prefix + element, message))

    # (1) partition tree
    seen_parts: dict[str, int] = {}
    parent_of: dict[str, Optional[str]] = {cell.root.id: None}
    depth_of: dict[str, int] = {}
    for part, depth in cell.root.walk():
        seen_parts[part.id] = seen_parts.get(part.id, 0) + 1
        depth_of.setdefault(part.id, depth)
        for c in part.children:
            parent_of.setdefault(c.id, part.id)
    for pid, n in seen_parts.items():
        if n > 1:
            add(1, f"partition {pid}", f"negation box appears {n} times; boxes must nest or be disjoint")

    # (2) tables reside in exactly one partition and their rows are readable
    table_part: dict[str, str] = {}
    tables = {}
    for part, _ in cell.root.walk():
        for t in part.tables:
            if t.id in table_part:
                add(2, f"table {t.id}", f"placed in partitions {table_part[t.id]} and {part.id}")
                continue
            table_part[t.id] = part.id
            tables[t.id] = t
            if not t.rows:
                add(2, f"table {t.id}", "table box shows no attribute")
            if schema is not None and t.relation not in schema:
                add(2, f"table {t.id}", f"unknown relation {t.relation}")
            for i, row in enumerate(t.rows):
                if not row.attr:
                    add(2, f"table {t.id} row {i}", "row has no attribute name")
                elif schema is not None and t.relation in schema and row.attr not in schema.attrs(t.relation):
                    add(2, f"table {t.id} row {i}", f"{t.relation} has no attribute {row.attr}")
                if (row.op is None) != (row.value is None):
                    add(2, f"table {t.id} row {i}", "selection needs both an operator and a value")

    # (3) non-empty leaves
    for part, _ in cell.root.walk():
        if not part.children and not part.tables:
            what = "empty canvas" if part is cell.root else "leaf negation box holds no table"
            add(3, f"partition {part.id}", what)

    def chain(pid):
        out_ = []
        while pid is not None:
            out_.append(pid)
            pid = parent_of.get(pid)
        return out_

    def row_exists(ref: RowRef) -> bool:
        t = tables.get(ref.table)
        return t is not None and 0 <= ref.row < len(t.rows)

    # (4) joins
    for i, e in enumerate(cell.edges):
        name = f"edge {i}"
        missing = [str(r) for r in (e.source, e.target) if not row_exists(r)]
        if missing:
            add(4, name, f"endpoint {', '.join(missing)} does not exist")
            continue
        a, b = table_part[e.source.table], table_part[e.target.table]
        if a not in chain(b) and b not in chain(a):
            add(4, name, f"joins partitions {a} and {b}, which are not on one ancestor chain")
        if e.op in ASYMMETRIC and not e.directed:
            add(4, name, f"operator {e.op.symbol} needs an arrow")

    # (5) output box
    if mode == SENTENCE:
        if cell.output is not None:
            add(5, "output", "a sentence has no output table")
    elif cell.output is None:
        add(5, "output", "query diagram has no output table")
    else:
        o = cell.output
        if not o.attrs:
            add(5, f"output {o.name}", "output table has no attribute")
        if len(set(o.attrs)) != len(o.attrs):
            add(5, f"output {o.name}", "output attributes repeat")
        if len(o.links) != len(o.attrs):
            add(5, f"output {o.name}", f"{len(o.attrs)} attributes but {len(o.links)} connections")
        for attr, ref in zip(o.attrs, o.links):
            if not row_exists(ref):
                add(5, f"output {o.name}.{attr}", f"connected row {ref} does not exist")
            elif table_part[ref.table] != cell.root.id:
                add(5, f"output {o.name}.{attr}", f"connected to table {ref.table} outside the root partition")
    return out


def validate_diagram(d: Diagram, schema: Optional[Schema] = None) -> list[DiagramViolation]:
    """All violations, each tagged with its condition number and element id."""
    out: list[DiagramViolation] = []
    if not d.cells:
        out.append(DiagramViolation(3, "diagram", "no cell (empty canvas)"))
    multi = len(d.cells) > 1
    for i, cell in enumerate(d.cells):
        out.extend(_cell_violations(cell, f"cell {i} " if multi else "", d.mode, schema))
    if d.mode not in (QUERY, SENTENCE):
        out.append(DiagramViolation(5, "diagram", f"unknown mode {d.mode!r}"))
    signatures = {(c.output.name, frozenset(c.output.attrs)) for c in d.cells if c.output is not None}
    if len(signatures) > 1:
        text = "; ".join(f"{n}({', '.join(sorted(a))})" for n, a in sorted(signatures, key=str))
        out.append(DiagramViolation(6, "cells", f"output tables differ across union cells: {text}"))
    return out


def require_valid(d: Diagram, schema: Optional[Schema] = None) -> Diagram:
    violations = validate_diagram(d, schema)
    if violations:
        raise ValidityError(violations)
    return d
