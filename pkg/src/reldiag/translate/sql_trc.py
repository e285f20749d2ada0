"""SQL <-> TRC.

SQL blocks map to scope heads (FROM lists become quantified variables), NOT EXISTS
subqueries to child scopes and the SELECT DISTINCT list to output bindings.
Membership and quantified subqueries are first rewritten into [NOT] EXISTS form,
then positive EXISTS subqueries dissolve into the enclosing scope via quantifier
pull-up.
"""
from __future__ import annotations

import re
from typing import Optional, Union

from ..canon import check_safe, fresh_name, require_anchored, trc_pullup
from ..errors import SchemaError, ScopeError, TranslationError
from ..model import CompOp, Schema
from ..syntax import (And, AttrRef, Binding, Column, Exists, Formula, FromItem, Not, Or,
                      OutputSpec, RawTrcQuery, SqlComparison, SqlExists, SqlIn, SqlNot, SqlOr,
                      SqlPred, SqlQuantified, SqlQuery, SqlSelect, TrcPred, TrcQuery, TrcScope,
                      formula_has_or)

OUTPUT_NAME = "Q"


class _Translator:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.used: set[str] = {OUTPUT_NAME}
        self.env: list[dict[str, tuple[str, str]]] = []  # alias -> (variable, relation)

    def bind_block(self, from_: tuple[FromItem, ...]) -> tuple[Binding, ...]:
        frame: dict[str, tuple[str, str]] = {}
        bindings = []
        for item in from_:
            if item.table not in self.schema:
                raise SchemaError(f"unknown relation {item.table!r}")
            if item.name in frame:
                raise SchemaError(f"table name {item.name} used twice in one FROM clause")
            var = item.name.lower()
            if var in self.used:
                var = fresh_name(var, self.used)
            self.used.add(var)
            frame[item.name] = (var, item.table)
            bindings.append(Binding(var, item.table))
        self.env.append(frame)
        return tuple(bindings)

    def column(self, c: Column) -> AttrRef:
        for frame in reversed(self.env):
            if c.table is not None:
                if c.table in frame:
                    var, rel = frame[c.table]
                    if c.name not in self.schema.attrs(rel):
                        raise SchemaError(f"{c.table} has no attribute {c.name!r}")
                    return AttrRef(var, c.name)
                continue
            hits = [(var, rel) for var, rel in frame.values() if c.name in self.schema.attrs(rel)]
            if len(hits) > 1:
                raise SchemaError(f"ambiguous column {c.name}; qualify it")
            if hits:
                return AttrRef(hits[0][0], c.name)
        if c.table is not None:
            raise ScopeError(c.table)
        raise SchemaError(f"unknown column {c.name!r}")

    def block(self, s: SqlSelect, extra=None) -> tuple[tuple[Binding, ...], list[Formula], list[AttrRef]]:
        """Bindings, body conjuncts and resolved select list of a SELECT block.

        ``extra(cols)`` builds additional conjuncts from the resolved select list while the
        block's names are still in scope.
        """
        bindings = self.bind_block(s.from_)
        items = [self.pred(p) for p in s.where]
        cols = [self.column(c) for c in s.columns] if s.columns is not None else []
        if extra is not None:
            items.extend(extra(cols))
        self.env.pop()
        return bindings, items, cols

    def subquery(self, s: SqlSelect, extra=None) -> Exists:
        bindings, items, _ = self.block(s, extra)
        return Exists(bindings, And(tuple(_flatten(items))))

    def pred(self, p: SqlPred) -> Formula:
        if isinstance(p, SqlComparison):
            right = self.column(p.right) if isinstance(p.right, Column) else p.right
            return TrcPred(self.column(p.left), p.op, right)
        if isinstance(p, SqlNot):
            return Not(And(tuple(_flatten([self.pred(q) for q in p.preds]))))
        if isinstance(p, SqlExists):
            sub = self.subquery(p.sub)
            return Not(sub) if p.negated else sub
        if isinstance(p, SqlIn):
            outer = [self.column(c) for c in p.columns]
            if p.sub.columns is None or len(p.sub.columns) != len(outer):
                raise SchemaError("IN subquery must select as many columns as it is compared with")

            def equalities(cols):
                return [TrcPred(o, _EQ, c) for o, c in zip(outer, cols)]

            sub = self.subquery(p.sub, equalities)
            return Not(sub) if p.negated else sub
        if isinstance(p, SqlQuantified):
            outer = self.column(p.column)
            if p.sub.columns is None or len(p.sub.columns) != 1:
                raise SchemaError(f"{p.quantifier} subquery must select exactly one column")
            if p.quantifier == "ALL":
                sub = self.subquery(p.sub, lambda cols: [TrcPred(outer, p.op.complement(), cols[0])])
                return Not(sub)
            return self.subquery(p.sub, lambda cols: [TrcPred(outer, p.op, cols[0])])
        if isinstance(p, SqlOr):
            return Or(tuple(And(tuple(_flatten([self.pred(q) for q in b]))) for b in p.branches))
        raise TypeError(f"not a predicate: {p!r}")


_EQ = CompOp.EQ


def _flatten(items: list[Formula]) -> list[Formula]:
    out = []
    for i in items:
        if isinstance(i, And):
            out.extend(_flatten(list(i.items)))
        else:
            out.append(i)
    return out


def sql_to_raw(q: SqlQuery, schema: Schema) -> RawTrcQuery:
    """Direct structural translation; quantifiers may still sit mid-scope."""
    t = _Translator(schema)
    if q.head == "select":
        output_refs: list[AttrRef] = []

        def outputs(cols):
            output_refs.extend(cols)
            return []

        bindings, items, cols = t.block(q.select, outputs)
        attrs = _output_names([c.name for c in q.select.columns])
        out_preds = [TrcPred(AttrRef(OUTPUT_NAME, a), _EQ, ref) for a, ref in zip(attrs, output_refs)]
        formula = Exists(bindings, And(tuple(out_preds + _flatten(items))))
        return RawTrcQuery(formula, OutputSpec(OUTPUT_NAME, tuple(attrs)))
    if q.head == "not":
        return RawTrcQuery(Not(And(tuple(_flatten([t.pred(p) for p in q.preds])))))
    sub = t.subquery(q.select)
    return RawTrcQuery(Not(sub) if q.head == "not exists" else sub)


def _output_names(names: list[str]) -> list[str]:
    used: set[str] = set()
    out = []
    for n in names:
        if n in used:
            n = fresh_name(n, used)
        used.add(n)
        out.append(n)
    return out


def sql_to_trc(q: SqlQuery, schema: Schema, full: bool = False) -> Union[TrcQuery, RawTrcQuery]:
    """Translate SQL to canonical TRC; full mode returns the raw formula when it contains OR."""
    raw = sql_to_raw(q, schema)
    if formula_has_or(raw.formula):
        if not full:
            raise TranslationError("disjunction is outside the fragment; use full mode")
        return raw
    trc = trc_pullup(raw)
    check_safe(trc)
    return require_anchored(trc)


# -- TRC -> SQL ------------------------------------------------------------------


def _alias(var: str, relation: str) -> str:
    if var.lower() == relation.lower():
        return relation
    m = re.fullmatch(re.escape(relation.lower()) + r"(\d+)", var.lower())
    if m:
        return relation + m.group(1)
    return var


def _aliases(q: TrcQuery) -> dict[str, str]:
    mapping: dict[str, str] = {}
    taken: set[str] = set()
    for scope in q.root.walk():
        for b in scope.vars:
            a = _alias(b.var, b.relation)
            if a in taken:
                a = b.var
            k = 2
            base = a
            while a in taken:
                a = f"{base}_{k}"
                k += 1
            taken.add(a)
            mapping[b.var] = a
    return mapping


def _column(ref: AttrRef, aliases) -> Column:
    return Column(aliases[ref.var], ref.attr)


def _preds_sql(scope: TrcScope, aliases, output: Optional[str]) -> list[SqlPred]:
    out: list[SqlPred] = []
    for p in scope.preds:
        if output is not None and any(r.var == output for r in p.refs()):
            continue
        right = _column(p.rhs, aliases) if isinstance(p.rhs, AttrRef) else p.rhs
        out.append(SqlComparison(_column(p.lhs, aliases), p.op, right))
    for child in scope.negations:
        out.append(_negated_scope_sql(child, aliases))
    return out


def _from(scope: TrcScope, aliases) -> tuple[FromItem, ...]:
    items = []
    for b in scope.vars:
        a = aliases[b.var]
        items.append(FromItem(b.relation, None if a == b.relation else a))
    return tuple(items)


def _negated_scope_sql(scope: TrcScope, aliases) -> SqlPred:
    if scope.vars:
        return SqlExists(SqlSelect(None, _from(scope, aliases), tuple(_preds_sql(scope, aliases, None))),
                         negated=True)
    preds = _preds_sql(scope, aliases, None)
    if not preds:
        raise TranslationError("an empty negation scope has no SQL form")
    return SqlNot(tuple(preds))


def trc_to_sql(q: TrcQuery) -> SqlQuery:
    require_anchored(q)
    aliases = _aliases(q)
    root = q.root
    if q.output is not None:
        check_safe(q)
        bound = q.output_bindings()
        cols = tuple(_column(bound[a], aliases) for a in q.output.attrs)
        where = tuple(_preds_sql(root, aliases, q.output.name))
        return SqlQuery("select", SqlSelect(cols, _from(root, aliases), where, True))
    if root.vars:
        return SqlQuery("exists", SqlSelect(None, _from(root, aliases), tuple(_preds_sql(root, aliases, None))))
    if len(root.negations) == 1 and not root.preds:
        child = root.negations[0]
        if child.vars:
            return SqlQuery("not exists",
                            SqlSelect(None, _from(child, aliases), tuple(_preds_sql(child, aliases, None))))
        return SqlQuery("not", preds=tuple(_preds_sql(child, aliases, None)))
    raise TranslationError("a sentence whose root holds no tables needs exactly one negation "
                           "to be written in SQL")


def canonicalize_sql(q: SqlQuery, schema: Schema) -> SqlQuery:
    """Rewrite IN/ALL/ANY into EXISTS form and flatten positive EXISTS into the parent FROM.

    The result uses only NOT EXISTS and NOT (...) subqueries.
    """
    return trc_to_sql(sql_to_trc(q, schema))
