"""Normalization passes and fragment-membership checks."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import AnchoringError, SafetyError, TranslationError
from .model import CompOp
from .syntax import (And, AttrRef, Binding, Exists, Formula, Not, Or, RawTrcQuery, TrcPred,
                     TrcQuery, TrcScope)

# -- fresh names --------------------------------------------------------------


def fresh_name(base: str, used: set[str]) -> str:
    """``<base><k>`` with the smallest unused ``k >= 2``; trailing digits of ``base`` are dropped."""
    stem = re.sub(r"\d+$", "", base) or base
    k = 2
    while f"{stem}{k}" in used:
        k += 1
    name = f"{stem}{k}"
    used.add(name)
    return name


def formula_vars(f: Formula) -> set[str]:
    out: set[str] = set()
    if isinstance(f, TrcPred):
        out |= f.vars()
    elif isinstance(f, Exists):
        out |= {b.var for b in f.vars}
        out |= formula_vars(f.body)
    elif isinstance(f, Not):
        out |= formula_vars(f.body)
    else:
        for i in f.items:
            out |= formula_vars(i)
    return out


def _rename_ref(r: AttrRef, old: str, new: str) -> AttrRef:
    return AttrRef(new, r.attr) if r.var == old else r


def rename_pred(p: TrcPred, old: str, new: str) -> TrcPred:
    rhs = _rename_ref(p.rhs, old, new) if isinstance(p.rhs, AttrRef) else p.rhs
    return TrcPred(_rename_ref(p.lhs, old, new), p.op, rhs)


def substitute(f: Formula, old: str, new: str) -> Formula:
    """Rename free occurrences of variable ``old``."""
    if isinstance(f, TrcPred):
        return rename_pred(f, old, new)
    if isinstance(f, Exists):
        if any(b.var == old for b in f.vars):
            return f
        return Exists(f.vars, substitute(f.body, old, new))
    if isinstance(f, Not):
        return Not(substitute(f.body, old, new))
    return type(f)(tuple(substitute(i, old, new) for i in f.items))


# -- quantifier pull-up -------------------------------------------------------


def trc_pullup(q: RawTrcQuery) -> TrcQuery:
    """Hoist every quantifier to the nearest scope head (query start or right after a negation).

    Empty scopes such as the middle of a double negation are kept. Variables that
    would collide after hoisting are renamed with :func:`fresh_name`.
    """
    used = formula_vars(q.formula)
    if q.output is not None:
        used.add(q.output.name)
    root = _build_scope((), q.formula, frozenset(), used)
    return TrcQuery(root, q.output)


def _build_scope(bindings, body: Formula, ancestors: frozenset, used: set) -> TrcScope:
    vars_: list[Binding] = []
    names = set(ancestors)
    preds: list[TrcPred] = []
    pending: list[Formula] = []  # bodies of negations, built after this scope's vars are known

    def add_bindings(bs, f):
        for b in bs:
            if b.var in names:
                new = fresh_name(b.var, used)
                f = substitute(f, b.var, new)
                b = Binding(new, b.relation)
            names.add(b.var)
            vars_.append(b)
        return f

    def walk(f):
        if isinstance(f, TrcPred):
            preds.append(f)
        elif isinstance(f, And):
            for i in f.items:
                walk(i)
        elif isinstance(f, Exists):
            walk(add_bindings(f.vars, f.body))
        elif isinstance(f, Not):
            pending.append(f.body)
        else:
            raise TranslationError("disjunction cannot be pulled up; eliminate it first")

    walk(add_bindings(bindings, body))
    children = []
    scope_names = frozenset(names)
    for nb in pending:
        if isinstance(nb, Exists):
            children.append(_build_scope(nb.vars, nb.body, scope_names, used))
        else:
            children.append(_build_scope((), nb, scope_names, used))
    return TrcScope(tuple(vars_), tuple(preds), tuple(children))


# -- anchoring ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: tuple[int, ...]
    pred: TrcPred

    @property
    def scope(self) -> str:
        return "root" + "".join(f"/{i}" for i in self.path)

    def __str__(self) -> str:
        from .parsing.trc import format_pred
        return f"{format_pred(self.pred)} in scope {self.scope}"


def scopes_with_paths(scope: TrcScope, path: tuple[int, ...] = ()):
    yield path, scope
    for i, child in enumerate(scope.negations):
        yield from scopes_with_paths(child, path + (i,))


def check_anchored(q: TrcQuery) -> list[Violation]:
    """Predicates that reference no attribute of a table quantified in their own scope."""
    out = []
    for path, scope in scopes_with_paths(q.root):
        local = {b.var for b in scope.vars}
        for p in scope.preds:
            if not (p.vars() & local):
                out.append(Violation(path, p))
    return out


def require_anchored(q: TrcQuery) -> TrcQuery:
    violations = check_anchored(q)
    if violations:
        raise AnchoringError(violations)
    return q


def check_safe(q: TrcQuery) -> None:
    """Every output attribute is equated exactly once to a root-scope table attribute.

    Output references are allowed only in root predicates.
    """
    if q.output is None:
        return
    name = q.output.name
    root_vars = {b.var for b in q.root.vars}
    counts = {a: 0 for a in q.output.attrs}
    for p in q.root.preds:
        refs = [r for r in p.refs() if r.var == name]
        if not refs:
            continue
        other = [r for r in p.refs() if r.var != name]
        if p.op is not CompOp.EQ or len(refs) != 1 or len(other) != 1 or other[0].var not in root_vars:
            from .parsing.trc import format_pred
            raise SafetyError(f"output predicate {format_pred(p)} must equate the output "
                              "with an attribute of a root-scope table")
        counts[refs[0].attr] += 1
    for attr, n in counts.items():
        if n != 1:
            raise SafetyError(f"output attribute {name}.{attr} is bound {n} times (expected once)")
    for path, scope in scopes_with_paths(q.root):
        if not path:
            continue
        for p in scope.preds:
            if any(r.var == name for r in p.refs()):
                raise SafetyError("output attribute referenced inside a negation scope")


# -- helpers over canonical trees ----------------------------------------------


def all_bindings(q: TrcQuery) -> list[Binding]:
    return [b for s in q.root.walk() for b in s.vars]


def map_scopes(scope: TrcScope, fn) -> TrcScope:
    children = tuple(map_scopes(c, fn) for c in scope.negations)
    return fn(TrcScope(scope.vars, scope.preds, children))


def sql_canonicalize(q, schema):
    """Canonical SQL form: only NOT EXISTS subqueries, positive tables in the outer FROM.

    IN/NOT IN become [NOT] EXISTS with equalities, ALL becomes NOT EXISTS with the
    complemented operator, ANY becomes EXISTS, and positive EXISTS subqueries merge
    into the enclosing FROM clause. Raises :class:`AnchoringError` when the result is
    not anchored.
    """
    from .translate.sql_trc import canonicalize_sql
    return canonicalize_sql(q, schema)


# -- Datalog normal form ------------------------------------------------------


def normalize_datalog(p):
    """Rename IDBs and variables canonically so equal programs print identically.

    Body literals are ordered positives, negatives, built-ins (base atoms by name, then
    IDB atoms by the order they are reached from the answer). IDBs become ``I1, I2, ..``
    in dependency order, variables ``x1, x2, ..`` by first occurrence, and built-ins
    use ``<``/``<=`` instead of ``>``/``>=``.
    """
    from collections import Counter

    from .syntax import Atom, Builtin, Const, DatalogProgram, Literal, Rule, Var

    idbs = p.idbs

    def counts(rule):
        c = Counter()
        for item in rule.body:
            terms = item.atom.args if isinstance(item, Literal) else (item.left, item.right)
            c.update(t.name for t in terms if isinstance(t, Var))
        c.update(t.name for t in rule.head.args)
        return c

    def shape(t, c):
        if isinstance(t, Const):
            return (0, str(t.value))
        return (1, "_") if t.anonymous or c[t.name] == 1 else (2, "")

    def key(item, c):
        if isinstance(item, Builtin):
            return (2, 0, "", ())
        a = item.atom
        return (1 if item.negated else 0, 1 if a.pred in idbs else 0,
                "" if a.pred in idbs else a.pred, tuple(shape(t, c) for t in a.args))

    ordered = {}
    for rule in p.rules:
        c = counts(rule)
        ordered[rule.head.pred] = sorted(rule.body, key=lambda i: key(i, c))

    names: dict[str, str] = {}

    def visit(pred):
        for item in ordered[pred]:
            if isinstance(item, Literal) and item.atom.pred in idbs and item.atom.pred not in names:
                visit(item.atom.pred)
        if pred not in names:
            names[pred] = p.answer if pred == p.answer else f"I{len(names) + 1}"

    visit(p.answer)
    rules = []
    for pred, new_name in names.items():
        rule = p.rule_for(pred)
        c = counts(rule)
        vmap: dict[str, Var] = {}

        def term(t):
            if isinstance(t, Const):
                return t
            if t.anonymous or c[t.name] == 1:
                return Var("_")
            if t.name not in vmap:
                vmap[t.name] = Var(f"x{len(vmap) + 1}")
            return vmap[t.name]

        head = Atom(new_name, tuple(term(t) for t in rule.head.args))
        body = []
        for item in ordered[pred]:
            if isinstance(item, Literal):
                a = item.atom
                body.append(Literal(Atom(names.get(a.pred, a.pred), tuple(term(t) for t in a.args)),
                                    item.negated))
                continue
            left, op, right = term(item.left), item.op, term(item.right)
            if isinstance(left, Const) or op in (CompOp.GT, CompOp.GEQ):
                left, right, op = right, left, op.flip()
            if op.symmetric and isinstance(right, Var) and isinstance(left, Var) and \
                    int(right.name[1:]) < int(left.name[1:]):
                left, right = right, left
            body.append(Builtin(left, op, right))
        body = body[:len(body) - len(rule.builtins)] + sorted(
            body[len(body) - len(rule.builtins):], key=lambda b: (str(b.left), b.op.symbol, str(b.right)))
        rules.append(Rule(head, tuple(body)))
    return DatalogProgram(tuple(rules), p.answer)


# -- TRC normal form ------------------------------------------------------------


def normalize_trc(q: TrcQuery) -> TrcQuery:
    """Rename variables ``<relation><k>`` in pre-order and put predicates in a fixed form.

    Join predicates list the lexically smaller attribute first (flipping the operator)
    and predicates are sorted within their scope. Sibling scopes are ordered by their
    normal form computed with placeholder names, so the order does not depend on the
    input's variable names; numbering happens after sorting. Queries that differ only
    in variable names, predicate order, sibling order or operand sides map to the same
    result.
    """
    from .model import value_key
    out = q.output.name if q.output else None

    def pred(p: TrcPred, names) -> TrcPred:
        def ref(r: AttrRef) -> AttrRef:
            return AttrRef(names.get(r.var, r.var), r.attr)
        if not p.is_join:
            return TrcPred(ref(p.lhs), p.op, p.rhs)
        left, right, op = ref(p.lhs), ref(p.rhs), p.op
        if right.var == out or (left.var != out and (right.var, right.attr) < (left.var, left.attr)):
            left, right, op = right, left, op.flip()
        return TrcPred(left, op, right)

    def key(p: TrcPred):
        rhs = (0, p.rhs.var, p.rhs.attr) if p.is_join else (1,) + value_key(p.rhs)
        return (p.lhs.var, p.lhs.attr, p.op.symbol, rhs)

    def build(s: TrcScope, names: dict, counts: dict, prefix: str) -> TrcScope:
        names = dict(names)
        vars_ = []
        for b in s.vars:
            counts[b.relation] = counts.get(b.relation, 0) + 1
            names[b.var] = f"{prefix}{b.relation.lower()}{counts[b.relation]}"
            vars_.append(Binding(names[b.var], b.relation))
        preds = tuple(sorted((pred(p, names) for p in s.preds), key=key))
        order = sorted(s.negations, key=lambda c: repr(build(c, names, {}, "_")))
        children = tuple(build(c, names, counts, prefix) for c in order)
        return TrcScope(tuple(vars_), preds, children)

    return TrcQuery(build(q.root, {}, {}, ""), q.output)
