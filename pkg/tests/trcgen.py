"""Seeded generator of valid TRC queries for round-trip and property tests.

Queries nest at most three negation levels below the root, use at most five tables
and six predicates, and are anchored and safe by construction: every predicate sits
in a scope with a local table and its left operand is one of them.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from reldiag.model import CompOp, parse_schema

SCHEMA_TEXT = "R(A, B)\nS(A)\nT(B)"
SCHEMA = parse_schema(SCHEMA_TEXT)
OPS = ["=", "!=", "<", "<=", ">", ">="]


@dataclass
class _Scope:
    vars: list = field(default_factory=list)  # (name, relation)
    preds: list = field(default_factory=list)
    children: list = field(default_factory=list)


def _text(scope: _Scope, quantifier: str) -> str:
    head = ", ".join(f"{v} in {r}" for v, r in scope.vars)
    items = list(scope.preds) + [_text(c, "not exists") for c in scope.children]
    body = " and ".join(items)
    if not scope.vars:
        return f"not ({body})" if quantifier == "not exists" else body
    return f"{quantifier} {head} [ {body} ]"


def random_trc(rng: random.Random, max_depth: int = 3, max_tables: int = 5, max_preds: int = 6) -> str:
    counter = {"R": 0, "S": 0, "T": 0}
    state = {"tables": 0, "preds": 0}

    def new_var(rel):
        counter[rel] += 1
        state["tables"] += 1
        return f"{rel.lower()}{counter[rel]}", rel

    def pick_attr(var_rel):
        var, rel = var_rel
        return f"{var}.{rng.choice(SCHEMA.attrs(rel))}"

    def build(depth: int, visible: list) -> _Scope:
        scope = _Scope()
        n_vars = 1 if state["tables"] < max_tables else 0
        if n_vars and state["tables"] + 1 < max_tables and rng.random() < 0.3:
            n_vars = 2
        for _ in range(n_vars):
            scope.vars.append(new_var(rng.choice("RST")))
        seen = visible + scope.vars
        if scope.vars:
            for _ in range(rng.choice([0, 1, 1, 2])):
                if state["preds"] >= max_preds:
                    break
                state["preds"] += 1
                lhs = pick_attr(rng.choice(scope.vars))
                if rng.random() < 0.35:
                    scope.preds.append(f"{lhs} {rng.choice(OPS)} {rng.choice([0, 1])}")
                else:
                    scope.preds.append(f"{lhs} {rng.choice(OPS)} {pick_attr(rng.choice(seen))}")
        if depth < max_depth:
            for _ in range(rng.choice([0, 1, 1, 2])):
                if state["tables"] >= max_tables:
                    break
                scope.children.append(build(depth + 1, seen))
        if not scope.vars and not scope.children:
            # a scope without tables must still hold a negation to stay non-empty
            return scope if depth == 0 else None
        scope.children = [c for c in scope.children if c is not None]
        if not scope.vars and not scope.children:
            return None
        return scope

    sentence = rng.random() < 0.3
    while True:
        counter.update(R=0, S=0, T=0)
        state.update(tables=0, preds=0)
        root = build(0, [])
        if root is None or (not root.vars and (not sentence or not root.children)):
            continue
        if not root.vars and any(not c.vars for c in root.children):
            continue
        break
    if sentence:
        if not root.vars:
            return " and ".join(_text(c, "not exists") for c in root.children)
        return _text(root, "exists")
    out_var = rng.choice(root.vars)
    attr = rng.choice(SCHEMA.attrs(out_var[1]))
    root.preds.insert(0, f"Q.{attr} = {out_var[0]}.{attr}")
    return "{ Q(" + attr + ") | " + _text(root, "exists") + " }"


def random_queries(seed: int, count: int, **limits) -> list[str]:
    rng = random.Random(seed)
    return [random_trc(rng, **limits) for _ in range(count)]
