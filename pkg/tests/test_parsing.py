from __future__ import annotations

import os
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, corpus_files, corpus_schema
from reldiag.errors import (DuplicateHeadFault, RaError, RecursionFault, SafetyFault, ScopeError,
                            SourceError, UnionInFragmentError)
from reldiag.model import parse_schema
from reldiag.parsing import (EXTENSIONS, parse_datalog, parse_query, parse_ra, parse_sql, parse_trc,
                             print_query)
from reldiag.syntax import SqlExists, SqlOr, TrcQuery, extensional_tables
from trcgen import SCHEMA, random_trc

RS_SCHEMA = parse_schema("R(A, B)\nS(B)")


def test_sql_not_exists_subquery():
    q = parse_sql("SELECT DISTINCT R.A FROM R WHERE NOT EXISTS (SELECT * FROM S WHERE R.B = S.B)")
    (pred,) = q.select.where
    assert isinstance(pred, SqlExists) and pred.negated
    assert [f.table for f in pred.sub.from_] == ["S"]


def test_sql_or_needs_full_mode():
    text = "SELECT DISTINCT R.A FROM R WHERE R.A = R.B OR R.A = 1"
    with pytest.raises(SourceError) as info:
        parse_sql(text)
    assert (info.value.line, info.value.column, info.value.token) == (1, 44, "OR")
    assert any(isinstance(p, SqlOr) for p in parse_sql(text, full=True).select.where)


def test_sql_disjunction_in_full_mode():
    with open(os.path.join(CORPUS, "disjunction", "disjunction_sql.sql"), encoding="utf-8") as f:
        text = f.read()
    with pytest.raises(SourceError):
        parse_sql(text)
    q = parse_sql(text, full=True)
    assert "OR" in print_query(q)


@pytest.mark.parametrize("text", [
    "SELECT DISTINCT R.A FROM R WHERE",
    "SELECT DISTINCT R.A FROM R WHERE 1 = R.A",
    "SELECT R.A FROM",
    "SELECT DISTINCT R.A FROM R GROUP BY R.A",
])
def test_sql_syntax_errors(text):
    with pytest.raises(SourceError):
        parse_sql(text)


@pytest.mark.parametrize("text", [
    "select distinct r.a from R r where not exists (select * from S where r.b <> S.b)",
    "SELECT NOT (EXISTS (SELECT * FROM R WHERE R.A = 1))",
    "SELECT exists (SELECT * FROM R)",
])
def test_sql_keywords_case_insensitive_and_sentences(text):
    q = parse_sql(text)
    assert parse_sql(print_query(q)) == q


def test_trc_division_scope_tree():
    q = parse_trc(open(os.path.join(CORPUS, "division", "trc_division1.trc")).read(), RS_SCHEMA)
    assert isinstance(q, TrcQuery) and q.output.name == "Q"
    vars_by_depth = []
    scope, depth = q.root, 0
    while True:
        vars_by_depth.append([b.var for b in scope.vars])
        if not scope.negations:
            break
        (scope,) = scope.negations
    assert vars_by_depth == [["r"], ["s"], ["r2"]]


def test_trc_sentence_has_no_output():
    assert parse_trc("exists r in R [ r.A = 1 ]", RS_SCHEMA).output is None


def test_trc_scope_error_names_variable():
    with pytest.raises(ScopeError) as info:
        parse_trc("{ Q(A) | exists r in R [ Q.A = s.A ] }", RS_SCHEMA)
    assert info.value.variable == "s"


def test_trc_or_needs_full_mode():
    text = "{ Q(A) | exists r in R [ Q.A = r.A and (r.B = 1 or r.B = 2) ] }"
    with pytest.raises(SourceError):
        parse_trc(text, RS_SCHEMA)
    parse_trc(text, RS_SCHEMA, full=True)


def test_datalog_three_patternsg():
    p = parse_datalog("Q(x,y) :- R(x,y), not S(y).", RS_SCHEMA)
    assert len(p.rules) == 1 and p.answer == "Q"


def test_datalog_division_counts():
    p = parse_datalog("I(x) :- R(x, _), S(y), not R(x, y).\nQ(x) :- R(x, _), not I(x).", RS_SCHEMA)
    assert len(p.rules) == 2
    assert [r for _, r in extensional_tables(p, RS_SCHEMA)].count("R") == 3


@pytest.mark.parametrize("text, fault", [
    ("Q(x) :- not S(x).", SafetyFault),
    ("Q(x) :- R(y, _), not S(x).", SafetyFault),
    ("Q(x) :- R(x, _), x > z.", SafetyFault),
    ("Q(x) :- R(x, _), Q(x).", RecursionFault),
    ("I(x) :- S(x).\nI(x) :- S(x).\nQ(x) :- I(x).", DuplicateHeadFault),
])
def test_datalog_faults(text, fault):
    with pytest.raises(fault):
        parse_datalog(text, RS_SCHEMA)


def test_datalog_safety_fault_names_variable():
    with pytest.raises(SafetyFault) as info:
        parse_datalog("Q(x) :- not S(x).", RS_SCHEMA)
    assert info.value.variable == "x"


@pytest.mark.parametrize("text, tables", [
    ("Minus(R, Product(Project[A](R), S))", ["R", "R", "S"]),
    ("Join(R, Minus(Project[B](R), S))", ["R", "R", "S"]),
    ("Select[A > 1 and B = A](R)", ["R"]),
    ("Minus(Project[B](R), Rename[B->B](S))", ["R", "S"]),
])
def test_ra_examples(text, tables):
    e = parse_ra(text, RS_SCHEMA)
    assert [r for _, r in extensional_tables(e, RS_SCHEMA)] == tables


def test_ra_union_is_outside_the_fragment():
    with pytest.raises(UnionInFragmentError):
        parse_ra("Union(Project[B](R), S)", RS_SCHEMA)
    parse_ra("Union(Project[B](R), S)", RS_SCHEMA, full=True)


@pytest.mark.parametrize("text", ["Project[C](R)", "Product(R, R)", "Minus(R, S)"])
def test_ra_attribute_faults(text):
    with pytest.raises(RaError):
        parse_ra(text, RS_SCHEMA)


def _corpus_sources():
    for group in sorted(os.listdir(CORPUS)):
        if not os.path.exists(os.path.join(CORPUS, group, "schema.txt")):
            continue
        for name in corpus_files(group):
            yield group, name


@pytest.mark.parametrize("group, name", list(_corpus_sources()))
def test_printer_fixpoint_on_corpus(group, name):
    schema = corpus_schema(group)
    lang = EXTENSIONS[os.path.splitext(name)[1]]
    text = open(os.path.join(CORPUS, group, name), encoding="utf-8").read()
    q = parse_query(text, lang, schema, full=True)
    again = parse_query(print_query(q), lang, schema, full=True)
    assert again == q
    assert print_query(again) == print_query(q)
    if lang != "diagram":
        assert extensional_tables(again, schema) == extensional_tables(q, schema)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_trc_print_parse_round_trip(seed):
    q = parse_trc(random_trc(random.Random(seed)), SCHEMA)
    assert parse_trc(print_query(q), SCHEMA) == q
