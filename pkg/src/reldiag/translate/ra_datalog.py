"""Relational algebra <-> Datalog.

RA to Datalog emits one rule per operator node (renames pass through, base relations
appear inline as atoms). Datalog to RA translates each rule into joins of its
positive atoms, a selection for built-ins, and one difference per negated atom,
inlining IDB definitions since RA has no views.
"""
from __future__ import annotations

from typing import Optional


from ..errors import TranslationError
from ..model import CompOp, Schema
from ..parsing.datalog import make_program, topological_rules
from ..parsing.ra import natural_join_layout, ra_columns, resolve
from ..syntax import (Atom, Builtin, ColRef, Const, DatalogProgram, Join, Literal, Minus, Product,
                      Project, RaCond, RaExpr, Rel, Rename, Rule, Select, Term, Union_, Var)

ANSWER = "Q"


class _RaToDatalog:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.rules: list[Rule] = []
        self.counter = 0

    def name(self) -> str:
        self.counter += 1
        return f"I{self.counter}"

    def atom_for(self, e: RaExpr) -> tuple[str, int]:
        """Predicate computing ``e`` and its arity; emits rules for operator nodes."""
        while isinstance(e, Rename):
            e = e.child
        if isinstance(e, Rel):
            return e.name, self.schema.arity(e.name)
        return self.emit(e, None)

    def emit(self, e: RaExpr, head: Optional[str]) -> tuple[str, int]:
        """Rules for ``e`` with head ``head``; children are named first (post-order)."""
        while isinstance(e, Rename):
            e = e.child
        n_vars = 0

        def fresh(k):
            nonlocal n_vars
            out = [Var(f"x{n_vars + i + 1}") for i in range(k)]
            n_vars += k
            return out

        if isinstance(e, Rel):
            xs = fresh(self.schema.arity(e.name))
            body = [Literal(Atom(e.name, tuple(xs)))]
            return self._add(head, xs, body)
        if isinstance(e, Project):
            child, arity = self.atom_for(e.child)
            ccols = ra_columns(e.child, self.schema)
            xs = fresh(arity)
            head_vars = [xs[resolve(ccols, a)] for a in e.attrs]
            return self._add(head, head_vars, [Literal(Atom(child, tuple(xs)))])
        if isinstance(e, Select):
            child, arity = self.atom_for(e.child)
            ccols = ra_columns(e.child, self.schema)
            xs = fresh(arity)
            body = [Literal(Atom(child, tuple(xs)))]
            body += [_builtin(c, ccols, xs) for c in e.conds]
            return self._add(head, xs, body)
        if isinstance(e, (Product, Join)):
            left, la = self.atom_for(e.left)
            right, ra = self.atom_for(e.right)
            xs, ys = fresh(la), fresh(ra)
            body_builtins = []
            head_vars = xs + ys
            if isinstance(e, Join) and e.conds is None:
                lcols, rcols = ra_columns(e.left, self.schema), ra_columns(e.right, self.schema)
                pairs, keep = natural_join_layout(lcols, rcols)
                for li, ri in pairs:
                    ys[ri] = xs[li]
                head_vars = xs + [ys[i] for i in keep]
            elif isinstance(e, Join):
                cols = ra_columns(e.left, self.schema) + ra_columns(e.right, self.schema)
                body_builtins = [_builtin(c, cols, xs + ys) for c in e.conds]
            body = [Literal(Atom(left, tuple(xs))), Literal(Atom(right, tuple(ys)))] + body_builtins
            return self._add(head, head_vars, body)
        if isinstance(e, Minus):
            left, la = self.atom_for(e.left)
            right, _ = self.atom_for(e.right)
            xs = fresh(la)
            body = [Literal(Atom(left, tuple(xs))), Literal(Atom(right, tuple(xs)), negated=True)]
            return self._add(head, xs, body)
        if isinstance(e, Union_):
            raise TranslationError("union has no single-rule Datalog form")
        raise TypeError(f"not an RA expression: {e!r}")

    def _add(self, head: Optional[str], head_vars, body) -> tuple[str, int]:
        head = head or self.name()
        # a projection may list the same column twice; keep head variables distinct
        seen, hv, extra = set(), [], []
        for v in head_vars:
            if v.name in seen:
                nv = Var(f"{v.name}_{len(hv)}")
                extra.append(Builtin(nv, CompOp.EQ, v))
                hv.append(nv)
            else:
                seen.add(v.name)
                hv.append(v)
        self.rules.append(Rule(Atom(head, tuple(hv)), tuple(body) + tuple(extra)))
        return head, len(hv)


def _builtin(c: RaCond, cols: list[ColRef], xs: list[Var]) -> Builtin:
    left = xs[resolve(cols, c.lhs)]
    if isinstance(c.rhs, ColRef):
        return Builtin(left, c.op, xs[resolve(cols, c.rhs)])
    return Builtin(left, c.op, Const(c.rhs))


def ra_to_datalog(e: RaExpr, schema: Schema) -> DatalogProgram:
    """One IDB per operator node; the root becomes the answer ``Q``.

    A bare relation yields the copy rule ``Q(x1, ..) :- R(x1, ..)``.
    """
    ra_columns(e, schema)
    t = _RaToDatalog(schema)
    t.emit(e, ANSWER)
    return make_program(t.rules, schema, answer=ANSWER)


# ---------------------------------------------------------------------------
# Datalog -> RA
# ---------------------------------------------------------------------------


class _DatalogToRa:
    def __init__(self, p: DatalogProgram, schema: Schema):
        self.schema = schema
        self.program = p
        self.exprs: dict[str, tuple[RaExpr, list[str]]] = {}
        taken = {a for rel in schema for a in schema.attrs(rel)}
        self.prefix = "v" if _var_names(p) & taken else ""
        self.tmp = 0
        self.names: dict[str, str] = {}

    def col(self, name: str) -> str:
        if name in self.names:
            return self.names[name]
        if name.startswith("_"):
            return "u" + name[1:]
        return self.prefix + name

    def name_columns(self, rule: Rule) -> None:
        """Name each variable after the column it first binds, unless another variable has it."""
        self.names = {}
        used: set[str] = set()
        pending = []
        for a in rule.positives:
            cols = self.relation(a.pred)[1]
            for t, c in zip(a.args, cols):
                if isinstance(t, Var) and not t.anonymous and t.name not in self.names:
                    if c in used:
                        pending.append(t.name)
                        self.names[t.name] = ""
                    else:
                        self.names[t.name] = c
                        used.add(c)
        for v in pending:
            name = self.prefix + v
            while name in used:
                name += "_"
            self.names[v] = name
            used.add(name)

    def relation(self, pred: str) -> tuple[RaExpr, list[str]]:
        """Expression for a predicate and its column names."""
        if pred in self.exprs:
            return self.exprs[pred]
        return Rel(pred), list(self.schema.attrs(pred))

    def atom(self, atom: Atom) -> tuple[RaExpr, list[str]]:
        """Expression over an atom with columns named by its variables (each once)."""
        expr, cols = self.relation(atom.pred)
        targets, conds, keep, first = [], [], [], {}
        for i, t in enumerate(atom.args):
            if isinstance(t, Const):
                name = self.fresh_tmp(cols + targets)
                targets.append(name)
                conds.append(RaCond(ColRef(None, name), CompOp.EQ, t.value))
            elif t.name in first:
                name = self.fresh_tmp(cols + targets)
                targets.append(name)
                conds.append(RaCond(ColRef(None, first[t.name]), CompOp.EQ, ColRef(None, name)))
            elif t.anonymous and cols[i] not in self.names.values() and cols[i] not in targets:
                name = cols[i]  # dropped right away, so the old name can stay
                targets.append(name)
            else:
                name = self.col(t.name)
                first[t.name] = name
                targets.append(name)
                if not t.anonymous:
                    keep.append(name)
        expr = _rename(expr, cols, targets, self)
        if conds:
            expr = Select(tuple(conds), expr)
        if keep != targets:
            if not keep:
                raise TranslationError(f"atom {atom.pred} binds no variable")
            expr = Project(tuple(ColRef(None, k) for k in keep), expr)
        return expr, keep

    def fresh_tmp(self, avoid) -> str:
        while True:
            self.tmp += 1
            name = f"t{self.tmp}"
            if name not in avoid:
                return name

    def rule(self, rule: Rule) -> tuple[RaExpr, list[str]]:
        rule = substitute_equalities(rule)
        self.name_columns(rule)
        pos = rule.positives
        if not pos:
            raise TranslationError(f"rule {rule.head.pred} has no positive atom; RA needs one")
        expr, cols = self.atom(pos[0])
        for a in pos[1:]:
            e2, c2 = self.atom(a)
            expr = Join(None, expr, e2)
            cols = cols + [c for c in c2 if c not in cols]
        builtins = rule.builtins
        if builtins:
            expr = Select(tuple(self.cond(b) for b in builtins), expr)
        needed = [self.col(v.name) for v in rule.head.args]
        for n in rule.negatives:
            needed += [self.col(v.name) for v in n.vars() if not v.anonymous]
        needed = list(dict.fromkeys(needed))
        if set(needed) != set(cols):
            keep = [c for c in cols if c in needed]
            expr = Project(tuple(ColRef(None, c) for c in keep), expr)
            cols = keep
        for n in rule.negatives:
            nexpr, ncols = self.atom(n)
            z = [c for c in cols if c not in ncols]
            if z:
                right = Product(nexpr, Project(tuple(ColRef(None, c) for c in z), expr))
                order = ncols + z
            else:
                right, order = nexpr, ncols
            if order != cols:
                right = Project(tuple(ColRef(None, c) for c in cols), right)
            expr = Minus(expr, right)
        head = [self.col(v.name) for v in rule.head.args]
        if not head:
            raise TranslationError("a 0-ary rule (sentence) has no RA form")
        if head != cols:
            expr = Project(tuple(ColRef(None, c) for c in head), expr)
        return expr, head

    def cond(self, b: Builtin) -> RaCond:
        left, right, op = b.left, b.right, b.op
        if isinstance(left, Const):
            left, right, op = right, left, op.flip()
        if isinstance(left, Const):
            raise TranslationError("built-in between two constants")
        rhs = ColRef(None, self.col(right.name)) if isinstance(right, Var) else right.value
        return RaCond(ColRef(None, self.col(left.name)), op, rhs)

    def run(self) -> RaExpr:
        p = self.program
        if not p.rules:
            return Rel(p.answer)
        for rule in topological_rules(p):
            self.exprs[rule.head.pred] = self.rule(rule)
        return self.exprs[p.answer][0]


def _var_names(p: DatalogProgram) -> set[str]:
    out = set()
    for r in p.rules:
        for item in r.body:
            terms = item.atom.args if isinstance(item, Literal) else (item.left, item.right)
            out |= {t.name for t in terms if isinstance(t, Var)}
    return out


def substitute_equalities(rule: Rule) -> Rule:
    """Replace variables bound only through ``x = y`` built-ins by their partner."""
    direct = {v.name for a in rule.positives for v in a.vars()}
    mapping: dict[str, Term] = {}
    changed = True
    builtins = list(rule.builtins)
    while changed:
        changed = False
        for b in list(builtins):
            if b.op is not CompOp.EQ or not (isinstance(b.left, Var) and isinstance(b.right, Var)):
                continue
            l, r = b.left.name, b.right.name
            if l not in direct and r in direct:
                mapping[l] = b.right
            elif r not in direct and l in direct:
                mapping[r] = b.left
            else:
                continue
            direct.add(l)
            direct.add(r)
            builtins.remove(b)
            changed = True
    if not mapping:
        return rule

    def sub(t):
        while isinstance(t, Var) and t.name in mapping:
            t = mapping[t.name]
        return t

    body = []
    for item in rule.body:
        if isinstance(item, Literal):
            body.append(Literal(Atom(item.atom.pred, tuple(sub(t) for t in item.atom.args)), item.negated))
        elif item in builtins:
            body.append(Builtin(sub(item.left), item.op, sub(item.right)))
    return Rule(Atom(rule.head.pred, tuple(sub(t) for t in rule.head.args)), tuple(body))


def _rename(expr: RaExpr, current: list[str], targets: list[str], ctx) -> RaExpr:
    """Rename ``current`` to ``targets``; renames apply in order, so chains go last-first."""
    pending = [(c, t) for c, t in zip(current, targets) if c != t]
    if not pending:
        return expr
    ordered = []
    while pending:
        sources = {c for c, _ in pending}
        ready = [p for p in pending if p[1] not in sources]
        if not ready:
            break
        ordered.extend(ready)
        pending = [p for p in pending if p not in ready]
    if not pending:
        return Rename(tuple(ordered), expr)
    # a cycle: route every pair through a temporary name
    pairs = [(c, t) for c, t in zip(current, targets) if c != t]
    temps = []
    avoid = set(current) | set(targets)
    for _ in pairs:
        tmp = ctx.fresh_tmp(avoid)
        avoid.add(tmp)
        temps.append(tmp)
    expr = Rename(tuple((c, tmp) for (c, _), tmp in zip(pairs, temps)), expr)
    return Rename(tuple((tmp, t) for (_, t), tmp in zip(pairs, temps)), expr)


def datalog_to_ra(p: DatalogProgram, schema: Schema) -> RaExpr:
    """RA expression for the answer predicate.

    Each negated atom ``n`` is removed with ``P - (N x pi_z(P))`` where ``z`` are the
    columns of ``P`` not bound by ``n``, or ``P - N`` when ``z`` is empty.
    """
    e = _DatalogToRa(p, schema).run()
    ra_columns(e, schema)
    return e
