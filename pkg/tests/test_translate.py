from __future__ import annotations

import pytest

from conftest import corpus_files, corpus_query, corpus_schema
from reldiag.canon import check_anchored, normalize_datalog, normalize_trc
from reldiag.errors import CapacityError, TranslationError
from reldiag.evaluate import OracleOptions, equiv_check
from reldiag.model import parse_schema
from reldiag.parsing import parse_datalog, parse_ra, parse_sql, parse_trc, print_datalog, print_ra
from reldiag.pattern import pattern_iso
from reldiag.syntax import RawTrcQuery, TrcQuery, UnionQuery, extensional_tables, language_of
from reldiag.translate import (datalog_to_ra, datalog_to_trc, eliminate_disjunction, ra_to_datalog,
                               sql_to_trc, to_trc, translate, trc_to_datalog, trc_to_sql)

FIG1 = parse_schema("R(A, B)\nS(B)")
SMALL = OracleOptions(k=2, max_rows=2)


def count(q, schema, relation=None):
    tables = [r for _, r in extensional_tables(q, schema)]
    return len(tables) if relation is None else tables.count(relation)


# -- RA -> Datalog ----------------------------------------------------------------


def test_ra_selection_becomes_builtin():
    p = ra_to_datalog(parse_ra("Select[A > 1](R)", FIG1), FIG1)
    assert print_datalog(p) == "Q(x1, x2) :- R(x1, x2), x1 > 1."


def test_ra_single_relation_gets_copy_rule():
    p = ra_to_datalog(parse_ra("R", FIG1), FIG1)
    assert print_datalog(p) == "Q(x1, x2) :- R(x1, x2)."


def test_ra_three_patternsb_matches_pattern_of_three_patternsa():
    p = ra_to_datalog(corpus_query("three_patterns", "b.ra"), FIG1)
    assert count(p, FIG1) == 3
    assert pattern_iso(p, corpus_query("three_patterns", "a.dlg"), FIG1, normal_form=False).isomorph


# -- Datalog -> RA ----------------------------------------------------------------


def test_datalog_three_patternsg_needs_three_tables_in_ra():
    g = corpus_query("three_patterns", "g.dlg")
    e = datalog_to_ra(g, FIG1)
    assert print_ra(e) == "Minus(R, Project[A, B](Product(S, Project[A](R))))"
    assert count(e, FIG1) == 3
    assert equiv_check(g, e, FIG1).equivalent


def test_datalog_difference_without_complement_attributes():
    schema = parse_schema("R(A)\nS(A)")
    e = datalog_to_ra(parse_datalog("Q(x) :- R(x), not S(x).", schema), schema)
    assert print_ra(e) == "Minus(R, S)"


def test_datalog_division_to_ra():
    p = corpus_query("division", "datalog.dlg")
    e = datalog_to_ra(p, FIG1)
    assert count(e, FIG1, "R") == 3
    assert equiv_check(e, corpus_query("division", "ra_division.ra"), FIG1).equivalent


# -- TRC -> Datalog ---------------------------------------------------------------


def test_trc_division_guard_repair():
    p = trc_to_datalog(corpus_query("division", "trc_division1.trc"), FIG1)
    assert len(p.rules) == 2 and count(p, FIG1, "R") == 3
    assert normalize_datalog(p) == normalize_datalog(corpus_query("division", "datalog.dlg"))


def test_trc_nonequality_crossing_gets_guard():
    schema = corpus_schema("datalog_limits")
    p = trc_to_datalog(corpus_query("datalog_limits", "q3.trc"), schema)
    expected = parse_datalog("I(x) :- R(x), S(y), x > y.\nQ(x) :- R(x), not I(x).", schema)
    assert normalize_datalog(p) == normalize_datalog(expected)


def test_trc_local_predicates_need_no_repair():
    q = parse_trc("{ Q(A) | exists r in R, s in S [ Q.A = r.A and r.B = s.B and s.B > 1 ] }", FIG1)
    p = trc_to_datalog(q, FIG1)
    assert len(p.rules) == 1 and count(p, FIG1) == 2


# -- Datalog -> TRC ---------------------------------------------------------------


@pytest.mark.parametrize("name, tables", [("a.dlg", 3), ("d.dlg", 3), ("g.dlg", 2)])
def test_datalog_to_trc_keeps_tables(name, tables):
    p = corpus_query("three_patterns", name)
    t = datalog_to_trc(p, FIG1)
    assert count(t, FIG1) == tables
    assert check_anchored(t) == []
    assert equiv_check(p, t, FIG1).equivalent


def test_datalog_three_patternsg_to_trc_form():
    t = datalog_to_trc(corpus_query("three_patterns", "g.dlg"), FIG1)
    expected = parse_trc("{ Q(A, B) | exists r in R [ Q.A = r.A and Q.B = r.B "
                         "and not exists s in S [ s.B = r.B ] ] }", FIG1)
    assert normalize_trc(t) == normalize_trc(expected)


def test_positive_datalog_is_flat():
    t = datalog_to_trc(parse_datalog("Q(x) :- R(x, y), S(y), y > 1.", FIG1), FIG1)
    assert t.root.negations == () and len(t.root.vars) == 2


# -- SQL <-> TRC --------------------------------------------------------------------


@pytest.mark.parametrize("sql, trc", [
    ("sql_equivalence1.sql", "trc_division1.trc"),
    ("sql_equivalence2.sql", "trc_division2.trc"),
])
def test_sql_to_trc_division(sql, trc):
    t = sql_to_trc(corpus_query("division", sql), FIG1)
    assert normalize_trc(t) == normalize_trc(corpus_query("division", trc))


@pytest.mark.parametrize("name", ["b.sql", "h.sql", "m.sql"])
def test_trc_to_sql_round_trip(name):
    q = corpus_query("sqlvariety", name)
    back = sql_to_trc(trc_to_sql(sql_to_trc(q, FIG1)), FIG1)
    assert normalize_trc(back) == normalize_trc(sql_to_trc(q, FIG1))


# -- disjunction --------------------------------------------------------------------


def test_disjunction_pushed_into_negations():
    schema = corpus_schema("disjunction")
    raw = sql_to_trc(corpus_query("disjunction", "disjunction_sql.sql", full=True), schema, full=True)
    assert isinstance(raw, RawTrcQuery)
    u = eliminate_disjunction(raw)
    assert len(u.cells) == 1
    assert count(u.cells[0], schema, "R") == 3
    assert normalize_trc(u.cells[0]) == normalize_trc(corpus_query("disjunction", "eliminated.trc"))


def test_root_disjunction_splits_into_cells():
    schema = corpus_schema("disjunction_or")
    u = to_trc(corpus_query("disjunction_or", "or.sql", full=True), schema, full=True)
    assert isinstance(u, UnionQuery) and len(u.cells) == 2
    for cell in u.cells:
        assert count(cell, schema) == 3 and check_anchored(cell) == []
    assert equiv_check(corpus_query("disjunction_or", "or.sql", full=True), u, schema).equivalent


def test_or_free_input_is_a_single_cell():
    q = corpus_query("division", "trc_division1.trc")
    u = eliminate_disjunction(q)
    assert u.cells == (q,)


def test_dnf_limit():
    schema = parse_schema("R(A, B)")
    conj = " and ".join(f"(r.A = {i} or r.B = {i})" for i in range(7))
    q = parse_trc(f"{{ Q(A) | exists r in R [ Q.A = r.A and {conj} ] }}", schema, full=True)
    with pytest.raises(CapacityError):
        eliminate_disjunction(q)
    assert len(eliminate_disjunction(q, limit=128).cells) == 128


def test_disjunction_needs_full_mode():
    schema = corpus_schema("disjunction_or")
    raw = sql_to_trc(corpus_query("disjunction_or", "or.sql", full=True), schema, full=True)
    with pytest.raises(TranslationError):
        to_trc(raw, schema)


# -- semantic preservation and the occurrence ledger ---------------------------------


def _fragment_files():
    for group in ("three_patterns", "division", "sqlvariety", "patterns", "datalog_limits"):
        for name in corpus_files(group):
            if not name.endswith(".rdjson"):
                yield group, name


@pytest.mark.parametrize("group, name", list(_fragment_files()))
@pytest.mark.parametrize("target", ["trc", "datalog", "ra", "sql"])
def test_translations_preserve_semantics(group, name, target):
    schema = corpus_schema(group)
    q = corpus_query(group, name)
    out = translate(q, target, schema)
    assert language_of(out) == target
    assert equiv_check(q, out, schema, SMALL).equivalent
    before, after = count(q, schema), count(out, schema)
    source = language_of(q)
    if (source, target) in {("ra", "datalog"), ("datalog", "trc"), ("sql", "trc"), ("trc", "sql")}:
        assert after == before
    if target in ("datalog", "ra"):
        assert after >= before


def test_union_targets():
    schema = corpus_schema("disjunction_or")
    u = corpus_query("disjunction_or", "union.trc", full=True)
    assert isinstance(u, UnionQuery)
    with pytest.raises(TranslationError):
        translate(u, "ra", schema, full=True)
    sql = translate(u, "sql", schema, full=True)
    assert isinstance(sql, tuple) and len(sql) == 2


def test_eliminated_cells_have_no_disjunction():
    schema = corpus_schema("disjunction")
    u = to_trc(corpus_query("disjunction", "disjunction_sql.sql", full=True), schema, full=True)
    cells = u.cells if isinstance(u, UnionQuery) else (u,)
    for c in cells:
        assert isinstance(c, TrcQuery)
