"""TRC <-> diagram.

TRC to diagram: each negation scope becomes a partition, each table variable a box
in its scope's partition, each selection a row of its own, and every attribute used
in a join or the output gets one extra join row that edges attach to (a table with no
predicate at all shows its first attribute). Each edge starts at the smaller row
reference, flipping its operator when needed. Rows follow
schema order (or attribute name order without a schema) so that the diagram does not
depend on the order of predicates.

Diagram to TRC: partitions become scopes, boxes become variables ``<relation><k>``
numbered per relation in partition pre-order, selections stay with their table and
each edge lands in the deeper of its two partitions.
"""
from __future__ import annotations

from typing import Optional, Union

from ..canon import check_safe, require_anchored
from ..errors import TranslationError
from ..model import CompOp, Schema, value_key
from ..syntax import (AttrRef, Binding, OutputSpec, TrcPred, TrcQuery, TrcScope, UnionQuery)
from .model import QUERY, SENTENCE, AttrRow, Cell, Diagram, JoinEdge, OutputBox, Partition, RowRef, TableBox
from .validate import ASYMMETRIC, require_valid

_OP_ORDER = {op: i for i, op in enumerate(CompOp)}


def _cell(q: TrcQuery, schema: Optional[Schema]) -> Cell:
    require_anchored(q)
    check_safe(q)
    out_name = q.output.name if q.output else None
    relation = {b.var: b.relation for s in q.root.walk() for b in s.vars}
    selections: dict[tuple[str, str], list] = {}
    joined: set[tuple[str, str]] = set()
    joins: list[TrcPred] = []
    for scope in q.root.walk():
        for p in scope.preds:
            if out_name is not None and any(r.var == out_name for r in p.refs()):
                continue
            if p.is_join:
                joined.add((p.lhs.var, p.lhs.attr))
                joined.add((p.rhs.var, p.rhs.attr))
                joins.append(p)
            else:
                selections.setdefault((p.lhs.var, p.lhs.attr), []).append((p.op, p.rhs))
    bound = q.output_bindings()
    for ref in bound.values():
        joined.add((ref.var, ref.attr))

    def attr_order(var: str, attrs: set) -> list[str]:
        rel = relation[var]
        if schema is not None and rel in schema:
            order = list(schema.attrs(rel))
            return [a for a in order if a in attrs] + sorted(a for a in attrs if a not in order)
        return sorted(attrs)

    row_index: dict[tuple[str, str], int] = {}
    boxes: dict[str, TableBox] = {}
    for var in relation:
        used = {a for v, a in joined if v == var} | {a for v, a in selections if v == var}
        if not used:
            # an unconstrained table still shows one attribute so that the box is readable
            if schema is None or relation[var] not in schema:
                raise TranslationError(f"table {var} has no predicate; a schema is needed to draw it")
            used = {schema.attrs(relation[var])[0]}
        rows = []
        for attr in attr_order(var, used):
            if (var, attr) in joined or (var, attr) not in selections:
                row_index[(var, attr)] = len(rows)
                rows.append(AttrRow(attr))
            for op, value in sorted(selections.get((var, attr), ()),
                                    key=lambda s: (_OP_ORDER[s[0]], value_key(s[1]))):
                rows.append(AttrRow(attr, op, value))
        boxes[var] = TableBox(var, relation[var], tuple(rows))

    counter = iter(range(10 ** 9))

    def partition(scope: TrcScope) -> Partition:
        pid = f"q{next(counter)}"
        tables = tuple(boxes[b.var] for b in scope.vars)
        return Partition(pid, tables, tuple(partition(c) for c in scope.negations))

    root = partition(q.root)

    def ref(r: AttrRef) -> RowRef:
        return RowRef(r.var, row_index[(r.var, r.attr)])

    edges = []
    for p in joins:
        a, b, op = ref(p.lhs), ref(p.rhs), p.op
        if (b.table, b.row) < (a.table, a.row):
            a, b, op = b, a, op.flip()
        edges.append(JoinEdge(a, b, op, op in ASYMMETRIC))
    edges.sort(key=lambda e: (e.source.table, e.source.row, e.target.table, e.target.row, _OP_ORDER[e.op]))
    output = None
    if q.output is not None:
        output = OutputBox(q.output.name, q.output.attrs, tuple(ref(bound[a]) for a in q.output.attrs))
    return Cell(root, tuple(edges), output)


def trc_to_diagram(q: Union[TrcQuery, UnionQuery], schema: Optional[Schema] = None) -> Diagram:
    """Diagram for a canonical, anchored query (one cell per union member)."""
    cells = q.cells if isinstance(q, UnionQuery) else (q,)
    mode = SENTENCE if cells[0].output is None else QUERY
    d = Diagram(tuple(_cell(c, schema) for c in cells), mode)
    return require_valid(d)


def _cell_to_trc(cell: Cell, mode: str) -> TrcQuery:
    counts: dict[str, int] = {}
    var_of: dict[str, str] = {}
    depth: dict[str, int] = {}
    part_of: dict[str, str] = {}
    for part, d in cell.root.walk():
        depth[part.id] = d
        for t in part.tables:
            counts[t.relation] = counts.get(t.relation, 0) + 1
            var_of[t.id] = f"{t.relation.lower()}{counts[t.relation]}"
            part_of[t.id] = part.id
    tables = {t.id: t for t, _ in cell.tables()}

    def attr(ref: RowRef) -> AttrRef:
        return AttrRef(var_of[ref.table], tables[ref.table].rows[ref.row].attr)

    extra: dict[str, list[TrcPred]] = {}
    for e in cell.edges:
        a, b = part_of[e.source.table], part_of[e.target.table]
        home = a if depth[a] >= depth[b] else b
        extra.setdefault(home, []).append(TrcPred(attr(e.source), e.op, attr(e.target)))

    out_preds: list[TrcPred] = []
    output = None
    if mode == QUERY and cell.output is not None:
        o = cell.output
        output = OutputSpec(o.name, o.attrs)
        out_preds = [TrcPred(AttrRef(o.name, a), CompOp.EQ, attr(r)) for a, r in zip(o.attrs, o.links)]

    def scope(part: Partition) -> TrcScope:
        vars_ = tuple(Binding(var_of[t.id], t.relation) for t in part.tables)
        preds = []
        for t in part.tables:
            for row in t.rows:
                if row.is_selection:
                    preds.append(TrcPred(AttrRef(var_of[t.id], row.attr), row.op, row.value))
        preds.extend(extra.get(part.id, ()))
        if part is cell.root:
            preds = out_preds + preds
        return TrcScope(vars_, tuple(preds), tuple(scope(c) for c in part.children))

    return TrcQuery(scope(cell.root), output)


def diagram_to_trc(d: Diagram, schema: Optional[Schema] = None) -> Union[TrcQuery, UnionQuery]:
    """Read a valid diagram back as canonical TRC (a union for several cells)."""
    require_valid(d, schema)
    cells = [_cell_to_trc(c, d.mode) for c in d.cells]
    for c in cells:
        require_anchored(c)
        check_safe(c)
    if len(cells) == 1:
        return cells[0]
    if d.mode == SENTENCE:
        raise TranslationError("union cells are only defined for queries")
    return UnionQuery(tuple(cells))
