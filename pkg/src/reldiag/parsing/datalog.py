"""Non-recursive Datalog with negation: parser, well-formedness checks and printer.

Syntax: ``Q(x, y) :- R(x, y), not S(y), x > 1.`` with ``_`` for anonymous variables.
"""
from __future__ import annotations

from collections import Counter
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from ..errors import DuplicateHeadFault, RecursionFault, SafetyFault, SchemaError
from ..model import CompOp, Schema, format_value
from ..syntax import Atom, Builtin, Const, DatalogProgram, Literal, Rule, Term, Var
from .lexer import Parser

KEYWORDS = frozenset({"not"})


class _DatalogParser(Parser):
    def __init__(self, text: str):
        super().__init__(text, KEYWORDS)
        self.anon = 0

    def program(self) -> list[Rule]:
        rules = []
        while self.tok.kind != "eof":
            rules.append(self.rule())
        if not rules:
            raise self.error("expected at least one rule")
        return rules

    def rule(self) -> Rule:
        head = self.atom(head=True)
        self.expect(":-")
        body = [self.item()]
        while self.accept(","):
            body.append(self.item())
        if not self.accept(".") and self.tok.kind != "eof":
            self.expect(".")
        return Rule(head, tuple(body))

    def item(self):
        if self.accept_word("not"):
            return Literal(self.atom(), negated=True)
        if self.tok.kind == "ident" and not self.tok.text.startswith("_") and \
                self.peek().text in ("(", ",", "."):
            return Literal(self.atom())
        left = self.term()
        op = self.comp_op()
        right = self.term()
        return Builtin(left, op, right)

    def atom(self, head: bool = False) -> Atom:
        pred = self.ident("predicate name")
        args = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.term(head))
                while self.accept(","):
                    args.append(self.term(head))
            self.expect(")")
        return Atom(pred, tuple(args))

    def term(self, head: bool = False) -> Term:
        t = self.tok
        if self.at_value():
            return Const(self.value())
        if t.kind == "ident" and t.text == "_":
            if head:
                raise self.error("anonymous variable in a rule head")
            self.advance()
            self.anon += 1
            return Var(f"_{self.anon}")
        return Var(self.ident("variable"))


def parse_datalog(text: str, schema: Optional[Schema] = None) -> DatalogProgram:
    rules = _DatalogParser(text).program()
    return make_program(rules, schema)


def make_program(rules, schema: Optional[Schema] = None, answer: Optional[str] = None) -> DatalogProgram:
    """Build a program and verify the Datalog* restrictions."""
    rules = tuple(rules)
    heads = Counter(r.head.pred for r in rules)
    for pred, n in heads.items():
        if n > 1:
            raise DuplicateHeadFault(f"{pred} is defined by {n} rules; one rule per predicate is allowed")
    idbs = set(heads)
    arity = {r.head.pred: len(r.head.args) for r in rules}
    graph = {r.head.pred: {a.atom.pred for a in r.body if isinstance(a, Literal) and a.atom.pred in idbs}
             for r in rules}
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise RecursionFault(f"recursive definition through {' -> '.join(exc.args[1])}") from None
    for r in rules:
        _check_rule(r, idbs, arity, schema)
    if answer is None:
        used = {a for deps in graph.values() for a in deps}
        roots = [r.head.pred for r in rules if r.head.pred not in used]
        if len(roots) == 1:
            answer = roots[0]
        elif "Q" in roots:
            answer = "Q"
        else:
            answer = roots[-1]
    elif answer not in idbs:
        raise SchemaError(f"answer predicate {answer} has no rule")
    return DatalogProgram(rules, answer)


def _check_rule(rule: Rule, idbs: set, arity: dict, schema: Optional[Schema]) -> None:
    head_vars = []
    for a in rule.head.args:
        if not isinstance(a, Var):
            raise SafetyFault(f"rule head {rule.head.pred} may only contain variables")
        head_vars.append(a.name)
    if len(set(head_vars)) != len(head_vars):
        raise SafetyFault(f"rule head {rule.head.pred} repeats a variable")
    for item in rule.body:
        if isinstance(item, Literal):
            atom = item.atom
            if atom.pred in idbs:
                expected = arity[atom.pred]
            elif schema is not None:
                if atom.pred not in schema:
                    raise SchemaError(f"unknown relation {atom.pred!r}")
                expected = schema.arity(atom.pred)
            else:
                continue
            if len(atom.args) != expected:
                raise SchemaError(f"{atom.pred} used with {len(atom.args)} arguments, expected {expected}")
    if not rule.positives:
        if head_vars or any(isinstance(b, Builtin) for b in rule.body):
            v = head_vars[0] if head_vars else None
            what = f"; variable {v} is unsafe" if v else ""
            raise SafetyFault(f"rule {rule.head.pred} has no positive atom{what}", v)
    safe = positive_closure(rule)
    for v in head_vars:
        if v not in safe:
            raise SafetyFault(f"variable {v} in the head of {rule.head.pred} is unsafe", v)
    for atom in rule.negatives:
        for v in atom.vars():
            if not v.anonymous and v.name not in safe:
                raise SafetyFault(f"variable {v.name} occurs only in negated or built-in literals", v.name)
    for b in rule.builtins:
        for t in (b.left, b.right):
            if isinstance(t, Var) and (t.anonymous or t.name not in safe):
                raise SafetyFault(f"variable {t.name} occurs only in negated or built-in literals", t.name)


def positive_closure(rule: Rule) -> set[str]:
    """Variables of positive atoms plus those equated to them by built-ins."""
    safe = {v.name for a in rule.positives for v in a.vars()}
    changed = True
    while changed:
        changed = False
        for b in rule.builtins:
            if b.op is not CompOp.EQ:
                continue
            l, r = b.left, b.right
            if isinstance(l, Var) and isinstance(r, Var):
                if (l.name in safe) != (r.name in safe):
                    safe |= {l.name, r.name}
                    changed = True
    return safe


def topological_rules(p: DatalogProgram) -> list[Rule]:
    idbs = p.idbs
    graph = {r.head.pred: {a.atom.pred for a in r.body if isinstance(a, Literal) and a.atom.pred in idbs}
             for r in p.rules}
    order = list(TopologicalSorter(graph).static_order())
    return [p.rule_for(name) for name in order]


# -- printing ------------------------------------------------------------------


def _term_text(t: Term, singletons: set[str]) -> str:
    if isinstance(t, Const):
        return format_value(t.value)
    if t.anonymous or t.name in singletons:
        return "_"
    return t.name


def _atom_text(a: Atom, singletons: set[str]) -> str:
    if not a.args:
        return f"{a.pred}()"
    return f"{a.pred}({', '.join(_term_text(t, singletons) for t in a.args)})"


def print_rule(rule: Rule) -> str:
    counts = Counter()
    for t in rule.head.args:
        if isinstance(t, Var):
            counts[t.name] += 1
    for item in rule.body:
        terms = item.atom.args if isinstance(item, Literal) else (item.left, item.right)
        for t in terms:
            if isinstance(t, Var):
                counts[t.name] += 1
    singletons = {v for v, n in counts.items() if n == 1}
    parts = []
    for item in rule.body:
        if isinstance(item, Literal):
            parts.append(("not " if item.negated else "") + _atom_text(item.atom, singletons))
        else:
            parts.append(f"{_term_text(item.left, set())} {item.op.symbol} {_term_text(item.right, set())}")
    return f"{_atom_text(rule.head, set())} :- {', '.join(parts)}."


def print_datalog(p: DatalogProgram) -> str:
    return "\n".join(print_rule(r) for r in p.rules)
