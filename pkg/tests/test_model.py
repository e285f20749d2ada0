from __future__ import annotations

import itertools
from math import comb, prod

import pytest
from hypothesis import given, strategies as st

from reldiag.errors import CapacityError, SchemaError, TypeFault
from reldiag.model import (CompOp, Database, Schema, compare, count_databases, enumerate_databases,
                           parse_database, parse_schema)

values = st.one_of(st.integers(-5, 5), st.text(alphabet="abc", max_size=3))
same_tag_pairs = st.one_of(st.tuples(st.integers(-5, 5), st.integers(-5, 5)),
                           st.tuples(st.text(alphabet="abc", max_size=3), st.text(alphabet="abc", max_size=3)))
ops = st.sampled_from(list(CompOp))


def closed_form(schema: Schema, n: int, max_rows: int) -> int:
    return prod(sum(comb(n ** len(schema.attrs(r)), i) for i in range(min(max_rows, n ** len(schema.attrs(r))) + 1))
                for r in schema)


@pytest.mark.parametrize("op", list(CompOp))
def test_flip_and_complement_are_involutions(op):
    assert op.flip().flip() is op
    assert op.complement().complement() is op


@given(same_tag_pairs, ops)
def test_compare_flip_swaps_operands(pair, op):
    v, w = pair
    assert compare(v, op, w) == compare(w, op.flip(), v)


@given(same_tag_pairs, ops)
def test_compare_complement_negates(pair, op):
    v, w = pair
    assert compare(v, op, w) != compare(v, op.complement(), w)


@pytest.mark.parametrize("left, op, right, expected", [
    (1, CompOp.LT, 2, True),
    ("red", CompOp.EQ, "red", True),
    ("Z", CompOp.LT, "a", True),  # byte order
    (3, CompOp.NEQ, 3, False),
    (2, CompOp.GEQ, 2, True),
])
def test_compare_examples(left, op, right, expected):
    assert compare(left, op, right) is expected


def test_compare_across_tags_is_a_fault():
    with pytest.raises(TypeFault):
        compare(1, CompOp.EQ, "1")


def test_enumerate_single_unary_relation_in_order():
    dbs = list(enumerate_databases(parse_schema("S(A)"), [0, 1], 2))
    assert [d.to_json()["S"] for d in dbs] == [[], [[0]], [[1]], [[0], [1]]]


@pytest.mark.parametrize("schema_text, n, max_rows, expected", [
    ("R(A, B)", 2, 4, 16),
    ("R(A, B)\nS(B)", 2, 4, 64),
    ("S(A)", 3, 1, 4),
    ("R(A, B)\nS(B)\nT(A, B, C)", 2, 2, 11 * 4 * 37),
])
def test_enumerate_counts_match_closed_form(schema_text, n, max_rows, expected):
    schema = parse_schema(schema_text)
    assert closed_form(schema, n, max_rows) == expected
    assert count_databases(schema, list(range(n)), max_rows) == expected
    dbs = list(enumerate_databases(schema, list(range(n)), max_rows))
    assert len(dbs) == expected
    assert len({tuple(sorted((k, v) for k, v in d.relations.items())) for d in dbs}) == expected


def test_enumerate_matches_brute_force_powerset():
    schema = parse_schema("R(A, B)\nS(B)")
    domain = [0, 1]

    def subsets(space, limit):
        return [frozenset(c) for i in range(limit + 1) for c in itertools.combinations(space, i)]

    r_space = list(itertools.product(domain, repeat=2))
    s_space = [(v,) for v in domain]
    expected = {(r, s) for r in subsets(r_space, 4) for s in subsets(s_space, 2)}
    got = {(d["R"], d["S"]) for d in enumerate_databases(schema, domain, 4)}
    assert got == expected


def test_enumerate_is_deterministic():
    schema = parse_schema("R(A, B)\nS(B)")
    first = [d.to_text() for d in enumerate_databases(schema, [0, 1], 2)]
    assert first == [d.to_text() for d in enumerate_databases(schema, [0, 1], 2)]


def test_enumerate_respects_ceiling():
    with pytest.raises(CapacityError):
        next(iter(enumerate_databases(parse_schema("R(A, B, C)"), [0, 1, 2], 27, ceiling=1000)))


def test_enumerate_rejects_empty_domain():
    with pytest.raises(ValueError):
        list(enumerate_databases(parse_schema("S(A)"), [], 1))


def test_database_text_format():
    schema = parse_schema("R(A, B)")
    db = parse_database('# comment\n\nR(1, "red")\nR(2, \'x\')\nR(1, "red")\n', schema)
    assert db.to_json() == {"R": [[1, "red"], [2, "x"]]}
    assert parse_database(db.to_text(), schema) == db


@pytest.mark.parametrize("text", ["R(1, 2)\nX(3)", "R(1)", "R(1, 2"])
def test_database_errors(text):
    with pytest.raises(SchemaError):
        parse_database(text, parse_schema("R(A, B)"))


@pytest.mark.parametrize("text", ["R(A, A)", "R()", "R(A)\nR(B)"])
def test_schema_errors(text):
    with pytest.raises(SchemaError):
        parse_schema(text)


def test_database_rejects_wrong_arity():
    with pytest.raises(SchemaError):
        Database(parse_schema("R(A, B)"), {"R": {(1,)}})
