"""TRC <-> Datalog.

TRC to Datalog produces one rule per negation scope, innermost first. A rule must
bind every value it receives from its parent with a positive atom, so two repairs run
first, each adding a fresh copy of a table already in the query (a guard):

* a predicate that reaches past its parent scope is redirected to a guard placed in
  the parent, equated with the original table on the referenced attribute;
* a parent attribute used only in non-equality predicates is redirected to a guard
  in the scope itself.

Leaf scopes over a single table whose predicates only equate its attributes with
parent attributes or constants become negated base atoms instead of rules.

Datalog to TRC turns the answer rule into the root scope and each negated atom into
a negation scope (IDB definitions are expanded in place).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Optional, Union

from ..canon import check_safe, fresh_name, require_anchored
from ..errors import TranslationError
from ..model import CompOp, Schema
from ..parsing.datalog import make_program
from ..syntax import (Atom, AttrRef, Binding, Builtin, Const, DatalogProgram, Literal, OutputSpec,
                      Rule, Term, TrcPred, TrcQuery, TrcScope, Var)
from .ra_datalog import substitute_equalities

ANSWER = "Q"


@dataclass(eq=False)
class _Node:
    vars: list[Binding]
    preds: list[TrcPred]
    children: list["_Node"] = field(default_factory=list)
    parent: Optional["_Node"] = None
    guards: dict[str, str] = field(default_factory=dict)  # outer variable -> guard variable

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def _build(scope: TrcScope, parent=None) -> _Node:
    node = _Node(list(scope.vars), list(scope.preds), parent=parent)
    node.children = [_build(c, node) for c in scope.negations]
    return node


def _replace(p: TrcPred, old: AttrRef, new: AttrRef) -> TrcPred:
    lhs = new if p.lhs == old else p.lhs
    rhs = new if p.rhs == old else p.rhs
    return TrcPred(lhs, p.op, rhs)


class _Repair:
    def __init__(self, q: TrcQuery):
        self.root = _build(q.root)
        self.output = q.output.name if q.output else None
        self.owner: dict[str, _Node] = {}
        self.relation: dict[str, str] = {}
        for n in self.root.walk():
            for b in n.vars:
                self.owner[b.var] = n
                self.relation[b.var] = b.relation
        self.used = set(self.owner) | ({self.output} if self.output else set())

    def guard(self, node: _Node, outer: str, attr: str) -> AttrRef:
        g = node.guards.get(outer)
        if g is None:
            g = fresh_name(outer, self.used)
            node.guards[outer] = g
            node.vars.append(Binding(g, self.relation[outer]))
            self.owner[g] = node
            self.relation[g] = self.relation[outer]
        link = TrcPred(AttrRef(g, attr), CompOp.EQ, AttrRef(outer, attr))
        if link not in node.preds:
            node.preds.append(link)
        return AttrRef(g, attr)

    def reach_past_parent(self) -> bool:
        for node in self.root.walk():
            for i, p in enumerate(node.preds):
                for ref in p.refs():
                    if ref.var == self.output:
                        continue
                    owner = self.owner[ref.var]
                    if owner is node or owner is node.parent:
                        continue
                    node.preds[i] = _replace(p, ref, self.guard(node.parent, ref.var, ref.attr))
                    return True
        return False

    def unbound_params(self) -> bool:
        changed = False
        for node in self.root.walk():
            if node.parent is None:
                continue
            local = {b.var for b in node.vars}
            params = [r for p in node.preds for r in p.refs() if r.var not in local]
            bound = set()
            for p in node.preds:
                if p.op is CompOp.EQ and p.is_join:
                    a, b = p.lhs, p.rhs
                    if a.var in local and b.var not in local:
                        bound.add(b)
                    elif b.var in local and a.var not in local:
                        bound.add(a)
            for ref in dict.fromkeys(params):
                if ref in bound:
                    continue
                g = self.guard(node, ref.var, ref.attr)
                node.preds = [q if q.lhs == g and q.rhs == ref else _replace(q, ref, g) for q in node.preds]
                changed = True
        return changed

    def run(self) -> _Node:
        while self.reach_past_parent():
            pass
        self.unbound_params()
        return self.root


def _params(node: _Node) -> list[AttrRef]:
    local = {b.var for b in node.vars}
    return list(dict.fromkeys(r for p in node.preds for r in p.refs() if r.var not in local))


def _var_names():
    for name in ("x", "y", "z", "u", "v", "w"):
        yield name
    for k in count(1):
        yield f"x{k}"


class _Emitter:
    def __init__(self, schema: Schema, output: Optional[OutputSpec], inline: bool):
        self.schema = schema
        self.output = output
        self.inline = inline
        self.rules: list[Rule] = []
        self.counter = 0
        self.answer = ANSWER
        if output is not None and output.name not in schema:
            self.answer = output.name

    def inlinable(self, node: _Node) -> bool:
        if not self.inline or node.children or len(node.vars) != 1:
            return False
        var = node.vars[0].var
        seen = set()
        for p in node.preds:
            if p.op is not CompOp.EQ:
                return False
            local = [r for r in p.refs() if r.var == var]
            if len(local) != 1 or local[0].attr in seen:
                return False
            seen.add(local[0].attr)
        return True

    def emit(self, node: _Node) -> str:
        # union-find over attribute references (output attributes use the output name)
        parent: dict[AttrRef, AttrRef] = {}

        def find(r):
            parent.setdefault(r, r)
            while parent[r] != r:
                parent[r] = parent[parent[r]]
                r = parent[r]
            return r

        for b in node.vars:
            for a in self.schema.attrs(b.relation):
                find(AttrRef(b.var, a))
        others = []
        for p in node.preds:
            if p.op is CompOp.EQ and p.is_join:
                parent[find(p.lhs)] = find(p.rhs)
            else:
                others.append(p)
        child_calls = []
        for c in node.children:
            if self.inlinable(c):
                child_calls.append(("atom", c))
            else:
                child_calls.append(("rule", c, self.emit(c)))

        # how often each class is used decides between a named and an anonymous variable
        uses: dict[AttrRef, int] = {}
        for r in list(parent):
            uses[find(r)] = uses.get(find(r), 0) + 1
        for p in others:
            for r in p.refs():
                uses[find(r)] += 1
        params = _params(node) if node.parent is not None else []
        outputs = [AttrRef(self.output.name, a) for a in self.output.attrs] \
            if node.parent is None and self.output is not None else []
        for r in params + outputs:
            uses[find(r)] += 1
        for call in child_calls:
            for r in self.child_args(call):
                if isinstance(r, AttrRef):
                    uses[find(r)] += 1

        names = _var_names()
        var_of: dict[AttrRef, Var] = {}
        anon = count(1)

        def term(r) -> Term:
            if not isinstance(r, AttrRef):
                return Const(r)
            root = find(r)
            if uses[root] <= 1:
                return Var(f"_{next(anon)}")
            if root not in var_of:
                var_of[root] = Var(next(names))
            return var_of[root]

        head_args, extra = [], []
        for r in outputs or params:
            v = term(r)
            if v in head_args:
                fresh = Var(next(names))
                extra.append(Builtin(fresh, CompOp.EQ, v))
                v = fresh
            head_args.append(v)
        body: list = []
        for b in node.vars:
            body.append(Literal(Atom(b.relation, tuple(term(AttrRef(b.var, a))
                                                       for a in self.schema.attrs(b.relation)))))
        for p in others:
            body.append(Builtin(term(p.lhs), p.op, term(p.rhs)))
        for call in child_calls:
            args = tuple(term(r) if r is not None else Var(f"_{next(anon)}") for r in self.child_args(call))
            pred = call[1].vars[0].relation if call[0] == "atom" else call[2]
            body.append(Literal(Atom(pred, args), negated=True))
        body.extend(extra)
        if not body:
            raise TranslationError("an empty negation scope has no Datalog rule")
        if node.parent is None:
            name = self.answer
        else:
            self.counter += 1
            name = f"I{self.counter}"
        self.rules.append(Rule(Atom(name, tuple(head_args)), tuple(body)))
        return name

    def child_args(self, call) -> list:
        """Arguments of the negated atom for a child: parent refs, constants or ``None``."""
        node = call[1]
        if call[0] == "rule":
            return _params(node)
        b = node.vars[0]
        value = {}
        for p in node.preds:
            local, other = (p.lhs, p.rhs) if p.lhs.var == b.var else (p.rhs, p.lhs)
            value[local.attr] = other
        return [value.get(a) for a in self.schema.attrs(b.relation)]


def trc_to_datalog(q: TrcQuery, schema: Schema, inline: bool = True) -> DatalogProgram:
    """One rule per negation scope; guards are added where a rule would be unsafe."""
    require_anchored(q)
    check_safe(q)
    root = _Repair(q).run()
    e = _Emitter(schema, q.output, inline)
    e.emit(root)
    return make_program(e.rules, schema, answer=e.answer)


def repaired_trc(q: TrcQuery) -> TrcQuery:
    """The query after guard repair (same meaning, possibly more tables)."""
    root = _Repair(q).run()

    def back(n: _Node) -> TrcScope:
        return TrcScope(tuple(n.vars), tuple(n.preds), tuple(back(c) for c in n.children))

    return TrcQuery(back(root), q.output)


# ---------------------------------------------------------------------------
# Datalog -> TRC
# ---------------------------------------------------------------------------

_Value = Union[AttrRef, int, str, None]


class _ToTrc:
    def __init__(self, p: DatalogProgram, schema: Schema, output_name: str):
        self.program = p
        self.schema = schema
        self.idbs = p.idbs
        self.used = {output_name}
        self.fresh = count(1)
        self.output_name = output_name

    def expand(self, rule: Rule, mapping: dict[str, Term]) -> list:
        """Body of ``rule`` in the caller's namespace with positive IDB atoms unfolded."""
        local: dict[str, Term] = dict(mapping)

        def sub(t: Term) -> Term:
            if isinstance(t, Const):
                return t
            if t.name not in local:
                local[t.name] = Var(f"_{next(self.fresh)}") if t.anonymous else Var(f"v{next(self.fresh)}")
            return local[t.name]

        out = []
        for item in rule.body:
            if isinstance(item, Builtin):
                out.append(Builtin(sub(item.left), item.op, sub(item.right)))
                continue
            atom = Atom(item.atom.pred, tuple(sub(t) for t in item.atom.args))
            if not item.negated and atom.pred in self.idbs:
                callee = self.program.rule_for(atom.pred)
                inner = {}
                for h, a in zip(callee.head.args, atom.args):
                    if isinstance(a, Var) and a.anonymous:
                        a = Var(f"v{next(self.fresh)}")
                    inner[h.name] = a
                out.extend(self.expand(callee, inner))
            else:
                out.append(Literal(atom, item.negated))
        return out

    def scope(self, head: tuple[Term, ...], body: list, outer: list[_Value]) -> tuple[TrcScope, dict]:
        rule = substitute_equalities(Rule(Atom("_", head), tuple(body)))
        incoming: dict[str, list] = {}
        for t, value in zip(rule.head.args, outer):
            if isinstance(t, Var) and value is not None:
                incoming.setdefault(t.name, []).append(value)
        bindings: list[Binding] = []
        preds: list[TrcPred] = []
        ref: dict[str, AttrRef] = {}
        for atom in rule.positives:
            var = self.new_var(atom.pred)
            bindings.append(Binding(var, atom.pred))
            for attr, t in zip(self.schema.attrs(atom.pred), atom.args):
                r = AttrRef(var, attr)
                if isinstance(t, Const):
                    preds.append(TrcPred(r, CompOp.EQ, t.value))
                elif t.anonymous:
                    continue
                elif t.name in ref:
                    preds.append(TrcPred(r, CompOp.EQ, ref[t.name]))
                else:
                    ref[t.name] = r
                    for value in incoming.get(t.name, ()):
                        preds.append(TrcPred(r, CompOp.EQ, value))
        for b in rule.builtins:
            left, op, right = b.left, b.op, b.right
            if isinstance(left, Const):
                left, right, op = right, left, op.flip()
            if isinstance(left, Const):
                raise TranslationError("built-in between two constants")
            rhs = ref[right.name] if isinstance(right, Var) else right.value
            preds.append(TrcPred(ref[left.name], op, rhs))
        children = []
        for atom in rule.negatives:
            values = [None if isinstance(t, Var) and t.anonymous
                      else (t.value if isinstance(t, Const) else ref[t.name]) for t in atom.args]
            if atom.pred in self.idbs:
                callee = self.program.rule_for(atom.pred)
                fresh_head = {h.name: Var(f"v{next(self.fresh)}") for h in callee.head.args}
                cbody = self.expand(callee, fresh_head)
                chead = tuple(fresh_head[h.name] for h in callee.head.args)
                child, _ = self.scope(chead, cbody, values)
            else:
                var = self.new_var(atom.pred)
                cpreds = tuple(TrcPred(AttrRef(var, attr), CompOp.EQ, v)
                               for attr, v in zip(self.schema.attrs(atom.pred), values) if v is not None)
                child = TrcScope((Binding(var, atom.pred),), tuple(cpreds))
            children.append(child)
        return TrcScope(tuple(bindings), tuple(preds), tuple(children)), {
            "head": [ref.get(t.name) if isinstance(t, Var) else None for t in rule.head.args]}

    def new_var(self, relation: str) -> str:
        base = relation.lower()
        if base in self.used:
            return fresh_name(base, self.used)
        self.used.add(base)
        return base


def datalog_to_trc(p: DatalogProgram, schema: Schema, output_name: str = ANSWER) -> TrcQuery:
    """Canonical TRC for the answer predicate of ``p``."""
    t = _ToTrc(p, schema, output_name)
    rule = p.rule_for(p.answer)
    if rule is None:
        raise TranslationError(f"no rule defines {p.answer}")
    head = {h.name: Var(f"v{next(t.fresh)}") for h in rule.head.args}
    body = t.expand(rule, head)
    root, info = t.scope(tuple(head[h.name] for h in rule.head.args), body, [None] * len(head))
    if not rule.head.args:
        return require_anchored(TrcQuery(root))
    attrs, used = [], set()
    out_preds = []
    for r in info["head"]:
        if r is None:
            raise TranslationError("answer variable is not bound by a positive atom")
        name = r.attr if r.attr not in used else fresh_name(r.attr, used)
        used.add(name)
        attrs.append(name)
        out_preds.append(TrcPred(AttrRef(output_name, name), CompOp.EQ, r))
    root = TrcScope(root.vars, tuple(out_preds) + root.preds, root.negations)
    q = TrcQuery(root, OutputSpec(output_name, tuple(attrs)))
    check_safe(q)
    return require_anchored(q)
