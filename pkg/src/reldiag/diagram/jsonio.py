"""Diagram JSON: schema-checked loading and deterministic emission."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import DiagramSchemaError
from ..model import CompOp
from .model import AttrRow, Cell, Diagram, JoinEdge, OutputBox, Partition, RowRef, TableBox


@lru_cache(maxsize=1)
def diagram_schema() -> dict:
    text = resources.files("reldiag").joinpath("schemas/diagram.schema.json").read_text("utf-8")
    return json.loads(text)


def _json_path(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _row(r: AttrRow) -> dict:
    out: dict = {"attr": r.attr}
    if r.op is not None:
        out["op"] = r.op.symbol
        out["value"] = r.value
    return out


def _ref(r: RowRef) -> dict:
    return {"table": r.table, "row": r.row}


def _partition(p: Partition) -> dict:
    return {"id": p.id,
            "tables": [{"id": t.id, "relation": t.relation, "rows": [_row(r) for r in t.rows]}
                       for t in p.tables],
            "children": [_partition(c) for c in p.children]}


def diagram_to_json(d: Diagram) -> dict:
    cells = []
    for c in d.cells:
        cell: dict = {"root": _partition(c.root),
                      "edges": [{"from": _ref(e.source), "to": _ref(e.target), "op": e.op.symbol,
                                 "directed": e.directed} for e in c.edges]}
        if c.output is not None:
            cell["output"] = {"name": c.output.name, "attrs": list(c.output.attrs),
                              "links": [_ref(r) for r in c.output.links]}
        cells.append(cell)
    return {"mode": d.mode, "cells": cells}


def emit_json(d: Diagram) -> str:
    return json.dumps(diagram_to_json(d), indent=2) + "\n"


def diagram_from_json(doc) -> Diagram:
    try:
        jsonschema.validate(doc, diagram_schema())
    except jsonschema.ValidationError as exc:
        raise DiagramSchemaError(exc.message, _json_path(exc.absolute_path)) from None

    def ref(r):
        return RowRef(r["table"], r["row"])

    def row(r):
        if "op" in r or "value" in r:
            return AttrRow(r["attr"], CompOp.parse(r["op"]) if "op" in r else None, r.get("value"))
        return AttrRow(r["attr"])

    def partition(p):
        tables = tuple(TableBox(t["id"], t["relation"], tuple(row(r) for r in t["rows"]))
                       for t in p.get("tables", ()))
        return Partition(p["id"], tables, tuple(partition(c) for c in p.get("children", ())))

    cells = []
    for c in doc["cells"]:
        edges = tuple(JoinEdge(ref(e["from"]), ref(e["to"]), CompOp.parse(e.get("op", "=")),
                               e.get("directed", False)) for e in c.get("edges", ()))
        output = None
        if "output" in c:
            o = c["output"]
            output = OutputBox(o["name"], tuple(o["attrs"]), tuple(ref(r) for r in o["links"]))
        cells.append(Cell(partition(c["root"]), edges, output))
    return Diagram(tuple(cells), doc["mode"])


def load_json(text: str) -> Diagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagramSchemaError(f"not valid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    return diagram_from_json(doc)
