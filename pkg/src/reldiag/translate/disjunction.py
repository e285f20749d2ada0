"""Disjunction elimination.

Every formula is brought into a disjunction of conjunctive blocks (bindings,
predicates, negated scopes). Existential quantifiers distribute over the disjuncts
and keep all their variables in each of them. Under a negation the disjuncts turn
into sibling negation scopes (``not (A or B)`` is ``not A and not B``), and every
copy after the first gets fresh variable names. Disjuncts left at the root become
union cells.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..canon import check_safe, fresh_name, formula_vars, require_anchored
from ..errors import CapacityError
from ..syntax import (And, AttrRef, Binding, Exists, Formula, Not, Or, RawTrcQuery, TrcPred, TrcQuery,
                      TrcScope, UnionQuery)

DNF_LIMIT = 64


@dataclass(frozen=True)
class _Block:
    vars: tuple[Binding, ...] = ()
    preds: tuple[TrcPred, ...] = ()
    negations: tuple[TrcScope, ...] = ()

    def merge(self, other: "_Block") -> "_Block":
        return _Block(self.vars + other.vars, self.preds + other.preds, self.negations + other.negations)

    def scope(self) -> TrcScope:
        return TrcScope(self.vars, self.preds, self.negations)


class _Eliminator:
    def __init__(self, used: set[str], limit: int):
        self.used = used
        self.limit = limit

    def check(self, blocks: list) -> list:
        if len(blocks) > self.limit:
            raise CapacityError(f"disjunctive normal form needs {len(blocks)} disjuncts "
                                f"(limit {self.limit})")
        return blocks

    def dnf(self, f: Formula) -> list[_Block]:
        if isinstance(f, TrcPred):
            return [_Block(preds=(f,))]
        if isinstance(f, And):
            out = [_Block()]
            for item in f.items:
                out = self.check([a.merge(b) for a in out for b in self.dnf(item)])
            return out
        if isinstance(f, Or):
            out = []
            for item in f.items:
                out.extend(self.dnf(item))
            return self.check(out)
        if isinstance(f, Exists):
            return [_Block(f.vars).merge(b) for b in self.dnf(f.body)]
        if isinstance(f, Not):
            scopes = []
            for i, b in enumerate(self.dnf(f.body)):
                s = b.scope()
                scopes.append(s if i == 0 else self.rename_copy(s))
            return [_Block(negations=tuple(scopes))]
        raise TypeError(f"not a formula: {f!r}")

    def rename_copy(self, scope: TrcScope) -> TrcScope:
        """Deep copy of ``scope`` with every variable it binds renamed."""
        mapping = {}
        for s in scope.walk():
            for b in s.vars:
                mapping[b.var] = fresh_name(b.var, self.used)

        def ref(r):
            return AttrRef(mapping.get(r.var, r.var), r.attr) if isinstance(r, AttrRef) else r

        def walk(s: TrcScope) -> TrcScope:
            return TrcScope(tuple(Binding(mapping[b.var], b.relation) for b in s.vars),
                            tuple(TrcPred(ref(p.lhs), p.op, ref(p.rhs)) for p in s.preds),
                            tuple(walk(c) for c in s.negations))

        return walk(scope)


def eliminate_disjunction(q: Union[RawTrcQuery, TrcQuery, UnionQuery], limit: int = DNF_LIMIT) -> UnionQuery:
    """Equivalent union of disjunction-free canonical queries.

    Raises :class:`CapacityError` when a normal form would exceed ``limit`` disjuncts.
    """
    if isinstance(q, UnionQuery):
        cells = [c for cell in q.cells for c in eliminate_disjunction(cell, limit).cells]
        return UnionQuery(tuple(cells))
    if isinstance(q, TrcQuery):
        return UnionQuery((require_anchored(q),))
    used = formula_vars(q.formula)
    if q.output is not None:
        used.add(q.output.name)
    blocks = _Eliminator(used, limit).dnf(q.formula)
    cells = []
    for b in blocks:
        cell = TrcQuery(b.scope(), q.output)
        check_safe(cell)
        cells.append(require_anchored(cell))
    return UnionQuery(tuple(cells))
