from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus_files, corpus_query, corpus_schema
from reldiag.canon import (check_anchored, normalize_datalog, normalize_trc, sql_canonicalize,
                           trc_pullup)
from reldiag.errors import AnchoringError
from reldiag.evaluate import OracleOptions, equiv_check
from reldiag.model import CompOp, parse_schema
from reldiag.parsing import parse_datalog, parse_sql, parse_trc, print_sql, print_trc
from reldiag.syntax import (And, AttrRef, Binding, Exists, Not, RawTrcQuery, SqlExists, TrcPred, TrcQuery, TrcScope,
                            extensional_tables)
from reldiag.translate import sql_to_trc
from trcgen import SCHEMA as GEN_SCHEMA, random_trc

SCHEMA = parse_schema("R(A, B)\nS(B)")


def pred(lv, la, op, rhs):
    rhs = AttrRef(*rhs) if isinstance(rhs, tuple) else rhs
    return TrcPred(AttrRef(lv, la), op, rhs)


@pytest.mark.parametrize("name, count", [
    ("double_negation.trc", 1),
    ("complemented.trc", 0),
    ("hidden_disjunction.trc", 1),
])
def test_anchoring_examples(name, count):
    violations = check_anchored(corpus_query("anchoring", name))
    assert len(violations) == count


def test_anchoring_violation_names_scope_and_predicate():
    (v,) = check_anchored(corpus_query("anchoring", "hidden_disjunction.trc"))
    assert v.pred == pred("r", "A", CompOp.EQ, 0)
    assert v.scope == "root/0"


def test_pullup_hoists_nested_quantifier():
    inner = Exists((Binding("s", "S"),), pred("s", "B", CompOp.EQ, ("r", "B")))
    body = Exists((Binding("r", "R"),), And((pred("r", "A", CompOp.EQ, 0), inner)))
    q = trc_pullup(RawTrcQuery(Not(body), None))
    expected = parse_trc("not exists r in R, s in S [ r.A = 0 and s.B = r.B ]", SCHEMA)
    assert q == expected


def test_pullup_is_identity_on_canonical_queries():
    q = corpus_query("division", "trc_division2.trc")
    assert parse_trc(print_trc(q), corpus_schema("division")) == q


def test_pullup_keeps_empty_middle_scope():
    q = parse_trc("not exists r in R [ not ( not exists s in S [ s.B = r.B ] ) ]", SCHEMA)
    (outer,) = q.root.negations
    (middle,) = outer.negations
    assert middle.vars == () and middle.preds == () and len(middle.negations) == 1


def test_pullup_renames_colliding_variables():
    child = Not(Exists((Binding("s", "S"),), pred("s", "B", CompOp.EQ, ("r", "B"))))
    later = Exists((Binding("s", "S"),), pred("s", "B", CompOp.EQ, ("r", "A")))
    q = trc_pullup(RawTrcQuery(Exists((Binding("r", "R"),), And((child, later))), None))
    names = [b.var for b in q.root.vars] + [b.var for b in q.root.negations[0].vars]
    assert len(set(names)) == 3


@pytest.mark.parametrize("name, expected", [
    ("d.sql", "SELECT DISTINCT R.A\nFROM R, S\nWHERE R.B = S.B"),
    ("c.sql", "SELECT DISTINCT R.A\nFROM R, S\nWHERE R.B = S.B"),
    ("n.sql", "SELECT DISTINCT R.A\nFROM R\nWHERE NOT EXISTS (\n  SELECT *\n  FROM S\n  WHERE R.B < S.B)"),
])
def test_sql_canonicalize_examples(name, expected):
    assert print_sql(sql_canonicalize(corpus_query("sqlvariety", name), SCHEMA)) == expected


def test_sql_canonicalize_fixpoint():
    h = corpus_query("sqlvariety", "h.sql")
    assert sql_canonicalize(h, SCHEMA) == h


def _fragment_sql():
    for group in ("sqlvariety", "division", "sailors"):
        for name in corpus_files(group):
            if name.endswith(".sql"):
                yield group, name


@pytest.mark.parametrize("group, name", list(_fragment_sql()))
def test_sql_canonicalize_invariants(group, name):
    schema = corpus_schema(group)
    q = corpus_query(group, name)
    c = sql_canonicalize(q, schema)
    tables = lambda x: sorted(r for _, r in extensional_tables(x, schema))
    assert tables(c) == tables(q)
    assert check_anchored(sql_to_trc(c, schema)) == []
    assert equiv_check(q, c, schema, OracleOptions(k=2, max_rows=2)).equivalent
    assert _only_not_exists(c.select.where if c.select else c.preds)


def _only_not_exists(preds) -> bool:
    for p in preds:
        if isinstance(p, SqlExists):
            if not p.negated or not _only_not_exists(p.sub.where):
                return False
        elif hasattr(p, "sub"):
            return False
    return True


def test_sql_canonicalize_rejects_unanchored():
    q = parse_sql("SELECT DISTINCT R.A FROM R WHERE NOT EXISTS (SELECT * FROM S WHERE R.A = 0)")
    with pytest.raises(AnchoringError):
        sql_canonicalize(q, SCHEMA)


def test_normalize_datalog_ignores_names_and_order():
    a = parse_datalog("I(x, y) :- R(x, _), S(y).\nQ(x, y) :- R(x, y), not I(x, y).", SCHEMA)
    b = parse_datalog("Tmp(u, v) :- S(v), R(u, w).\nQ(p, q) :- not Tmp(p, q), R(p, q).", SCHEMA)
    assert normalize_datalog(a) == normalize_datalog(b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_normalize_trc_is_idempotent_and_equivalent(seed):
    q = parse_trc(random_trc(random.Random(seed)), GEN_SCHEMA)
    n = normalize_trc(q)
    assert normalize_trc(n) == n
    assert check_anchored(n) == []
    assert equiv_check(q, n, GEN_SCHEMA, OracleOptions(k=2, max_rows=1)).equivalent


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_normalize_trc_ignores_predicate_and_sibling_order(seed):
    rng = random.Random(seed)
    q = parse_trc(random_trc(rng), GEN_SCHEMA)

    def shuffled(s: TrcScope) -> TrcScope:
        children = [shuffled(c) for c in s.negations]
        preds = list(s.preds)
        rng.shuffle(children)
        rng.shuffle(preds)
        return TrcScope(s.vars, tuple(preds), tuple(children))

    assert normalize_trc(TrcQuery(shuffled(q.root), q.output)) == normalize_trc(q)
