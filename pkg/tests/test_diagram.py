from __future__ import annotations

import dataclasses
import json
import random
import xml.etree.ElementTree as ET

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_path, corpus_query, corpus_schema
from trcgen import SCHEMA_TEXT, random_trc
from reldiag.canon import normalize_trc
from reldiag.diagram import (SENTENCE, Cell, Diagram, JoinEdge, OutputBox, Partition, RowRef, TableBox,
                             diagram_to_trc, emit_json, emit_svg, load_json, trc_to_diagram, validate_diagram)
from reldiag.diagram.jsonio import diagram_schema
from reldiag.errors import DiagramSchemaError, ValidityError
from reldiag.model import CompOp, parse_schema
from reldiag.parsing import parse_query
from reldiag.syntax import UnionQuery, extensional_tables
from reldiag.translate import to_trc

SVG = "{http://www.w3.org/2000/svg}"


def worked():
    schema = corpus_schema("worked_example")
    return trc_to_diagram(corpus_query("worked_example", "nested.trc"), schema), schema


def shape(p: Partition):
    return (p.id, [t.id for t in p.tables], [shape(c) for c in p.children])


def test_worked_example_partitions():
    d, _ = worked()
    assert len(d.cells) == 1
    assert shape(d.cells[0].root) == (
        "q0", ["r1", "r2", "s1"],
        [("q1", [], [("q2", ["t1"], [])]),
         ("q3", ["s2", "t2"], [("q4", ["r3"], []), ("q5", ["r4"], [])])])


def test_worked_example_edges_and_output():
    d, _ = worked()
    cell = d.cells[0]
    assert len(cell.edges) == 8
    assert JoinEdge(RowRef("r4", 0), RowRef("s2", 1), CompOp.GT, directed=True) in cell.edges
    assert all(e.directed == (e.op is not CompOp.EQ and e.op is not CompOp.NEQ) for e in cell.edges)
    assert cell.output == OutputBox("Q", ("A", "D"), (RowRef("r1", 0), RowRef("r2", 1)))


def test_worked_example_selections():
    d, _ = worked()
    boxes = {t.id: t for t, _ in d.cells[0].tables()}
    sel = {(tid, r.attr, r.op, r.value) for tid, t in boxes.items() for r in t.rows if r.is_selection}
    assert sel == {("r2", "C", CompOp.GT, 1), ("r2", "C", CompOp.LT, 3), ("r3", "A", CompOp.NEQ, 1)}


def test_worked_example_is_valid():
    d, schema = worked()
    assert validate_diagram(d, schema) == []


@pytest.mark.parametrize("group,name", [
    ("worked_example", "nested.trc"),
    ("sailors", "all_sailors.trc"),
    ("sailors", "all_red_boats.trc"),
    ("sailors", "some_sailor_red_boat.trc"),
    ("division", "trc_division1.trc"),
    ("division", "sql_equivalence1.sql"),
    ("three_patterns", "a.dlg"),
    ("three_patterns", "g.dlg"),
    ("patterns", "q3.trc"),
])
def test_round_trip_and_table_count(group, name):
    schema = corpus_schema(group)
    t = to_trc(corpus_query(group, name), schema)
    d = trc_to_diagram(t, schema)
    assert validate_diagram(d, schema) == []
    assert d.table_count() == len(extensional_tables(t, schema))
    assert normalize_trc(diagram_to_trc(d, schema)) == normalize_trc(t)


def test_predicate_order_does_not_change_diagram():
    schema = corpus_schema("worked_example")
    a = parse_query("{ Q(A) | exists r in R, s in S [ Q.A = r.A and r.B = s.B and s.A > 2 ] }", "trc", schema)
    b = parse_query("{ Q(A) | exists r in R, s in S [ s.A > 2 and s.B = r.B and Q.A = r.A ] }", "trc", schema)
    assert trc_to_diagram(a, schema) == trc_to_diagram(b, schema)


def test_build_is_deterministic():
    assert worked()[0] == worked()[0]


def test_sentence_has_empty_root():
    schema = corpus_schema("sailors")
    d = trc_to_diagram(corpus_query("sailors", "all_sailors.trc"), schema)
    assert d.mode == SENTENCE
    root = d.cells[0].root
    assert root.tables == ()
    assert [t.relation for t in root.children[0].tables] == ["Sailor"]
    assert d.cells[0].output is None
    assert validate_diagram(d, schema) == []


def test_union_gives_one_cell_per_disjunct():
    schema = corpus_schema("disjunction_or")
    q = corpus_query("disjunction_or", "union.trc", full=True)
    d = trc_to_diagram(to_trc(q, schema, full=True), schema)
    assert len(d.cells) == 2
    assert validate_diagram(d, schema) == []
    assert isinstance(diagram_to_trc(d, schema), UnionQuery)


def test_unconstrained_table_shows_first_attribute():
    schema = corpus_schema("worked_example")
    q = parse_query("{ Q(A) | exists r in R, t in T [ Q.A = r.A ] }", "trc", schema)
    d = trc_to_diagram(q, schema)
    boxes = {t.id: t for t, _ in d.cells[0].tables()}
    assert [r.attr for r in boxes["t"].rows] == ["A"]
    assert validate_diagram(d, schema) == []


@pytest.mark.parametrize("name,expected", [
    ("nested.rdjson", []),
    ("sibling_join.rdjson", [4]),
    ("empty_canvas.rdjson", [3]),
])
def test_corpus_diagram_validity(name, expected):
    d = corpus_query("worked_example", name)
    assert sorted({v.condition for v in validate_diagram(d, corpus_schema("worked_example"))}) == expected


# Mutations of a valid diagram; each breaks exactly one condition.

def _replace_part(p: Partition, pid: str, fn) -> Partition:
    if p.id == pid:
        return fn(p)
    return dataclasses.replace(p, children=tuple(_replace_part(c, pid, fn) for c in p.children))


def _mutate(cell: Cell, **kw) -> Diagram:
    return Diagram((dataclasses.replace(cell, **kw),))


def _mutants() -> dict[int, Diagram]:
    d, _ = worked()
    cell = d.cells[0]
    root = cell.root
    t1 = next(t for t, _ in cell.tables() if t.id == "t1")
    out = {
        1: _mutate(cell, root=_replace_part(root, "q5", lambda p: dataclasses.replace(p, id="q4"))),
        2: _mutate(cell, root=_replace_part(root, "q4", lambda p: dataclasses.replace(p, tables=p.tables + (t1,)))),
        3: _mutate(cell, root=_replace_part(root, "q4", lambda p: dataclasses.replace(
            p, children=(Partition("q9"),)))),
        4: _mutate(cell, edges=cell.edges + (JoinEdge(RowRef("r3", 0), RowRef("r4", 0)),)),
        5: _mutate(cell, output=dataclasses.replace(cell.output, links=(RowRef("s2", 0), RowRef("r2", 1)))),
    }
    schema = corpus_schema("disjunction_or")
    u = trc_to_diagram(to_trc(corpus_query("disjunction_or", "union.trc", full=True), schema, full=True), schema)
    c0, c1 = u.cells
    out[6] = Diagram((c0, dataclasses.replace(c1, output=dataclasses.replace(c1.output, name="P"))))
    return out


@pytest.mark.parametrize("condition", [1, 2, 3, 4, 5, 6])
def test_mutation_breaks_exactly_one_condition(condition):
    d = _mutants()[condition]
    found = {v.condition for v in validate_diagram(d)}
    assert found == {condition}


def test_undirected_asymmetric_edge_is_flagged():
    d, schema = worked()
    cell = d.cells[0]
    edges = tuple(dataclasses.replace(e, directed=False) if e.op is CompOp.GT else e for e in cell.edges)
    assert [v.condition for v in validate_diagram(_mutate(cell, edges=edges), schema)] == [4]


def test_schema_mismatch_is_condition_two():
    d, schema = worked()
    cell = d.cells[0]
    bad = _replace_part(cell.root, "q0", lambda p: dataclasses.replace(
        p, tables=p.tables + (TableBox("x1", "Nope", ()),)))
    assert {v.condition for v in validate_diagram(_mutate(cell, root=bad), schema)} == {2}


def test_empty_diagram_is_condition_three():
    assert [v.condition for v in validate_diagram(Diagram(()))] == [3]


# JSON

@pytest.mark.parametrize("group,name", [
    ("worked_example", "nested.trc"),
    ("sailors", "all_sailors.trc"),
    ("three_patterns", "g.dlg"),
])
def test_json_round_trip(group, name):
    schema = corpus_schema(group)
    d = trc_to_diagram(to_trc(corpus_query(group, name), schema), schema)
    text = emit_json(d)
    jsonschema.validate(json.loads(text), diagram_schema())
    assert load_json(text) == d
    assert emit_json(load_json(text)) == text


def test_truncated_json_is_rejected():
    text = emit_json(worked()[0])
    with pytest.raises(DiagramSchemaError):
        load_json(text[: len(text) // 2])


def test_schema_violation_reports_path():
    doc = json.loads(emit_json(worked()[0]))
    del doc["cells"][0]["root"]["tables"][0]["relation"]
    with pytest.raises(DiagramSchemaError) as exc:
        load_json(json.dumps(doc))
    assert exc.value.path.startswith("$.cells[0].root.tables[0]")


def test_redboat_loads():
    d = corpus_query("sailors", "redboat.rdjson")
    assert d.mode == SENTENCE and d.table_count() == 1
    box = d.cells[0].root.tables[0]
    assert box.relation == "Boat"
    assert [(r.attr, r.op, r.value) for r in box.rows] == [("color", CompOp.EQ, "red")]
    assert validate_diagram(d, corpus_schema("sailors")) == []


def test_docs_schema_matches_package():
    import os
    docs = os.path.join(os.path.dirname(__file__), "..", "docs", "diagram-schema.json")
    with open(docs, encoding="utf-8") as f:
        assert json.load(f) == diagram_schema()


# SVG

def _svg(d: Diagram) -> ET.Element:
    return ET.fromstring(emit_svg(d))


def _dashed(root: ET.Element) -> list[ET.Element]:
    return [r for r in root.iter(SVG + "rect") if r.get("stroke-dasharray")]


def test_svg_three_patterns_i():
    root = _svg(corpus_query("three_patterns", "i.rdjson"))
    assert len(_dashed(root)) == 1
    lines = list(root.iter(SVG + "line"))
    assert len(lines) == 3
    assert all(line.get("marker-end") is None for line in lines)
    labels = {t.text for t in root.iter(SVG + "text")}
    assert not labels & {"<", ">", "≤", "≥", "≠"}


def test_svg_sentence_nests_two_boxes_without_output():
    root = _svg(corpus_query("sailors", "all_sailors.rdjson"))
    boxes = _dashed(root)
    assert len(boxes) == 2
    outer, inner = sorted(boxes, key=lambda r: float(r.get("width")), reverse=True)
    ox, oy, ow, oh = (float(outer.get(k)) for k in ("x", "y", "width", "height"))
    ix, iy, iw, ih = (float(inner.get(k)) for k in ("x", "y", "width", "height"))
    assert ox < ix and oy < iy and ix + iw < ox + ow and iy + ih < oy + oh
    assert not [r for r in root.iter(SVG + "rect") if r.get("fill") == "#808080"]


def test_svg_arrow_for_asymmetric_join():
    root = _svg(worked()[0])
    assert [line for line in root.iter(SVG + "line") if line.get("marker-end")]
    assert any(t.text == ">" or t.text == "<" for t in root.iter(SVG + "text"))


def test_svg_is_deterministic():
    assert emit_svg(worked()[0]) == emit_svg(worked()[0])


def test_svg_rejects_invalid_diagram():
    with pytest.raises(ValidityError) as exc:
        emit_svg(corpus_query("worked_example", "sibling_join.rdjson"))
    assert {v.condition for v in exc.value.violations} == {4}


# Properties

GEN_SCHEMA = parse_schema(SCHEMA_TEXT)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_random_round_trip(seed):
    q = parse_query(random_trc(random.Random(seed)), "trc", GEN_SCHEMA)
    d = trc_to_diagram(q, GEN_SCHEMA)
    assert validate_diagram(d, GEN_SCHEMA) == []
    assert d.table_count() == len(extensional_tables(q, GEN_SCHEMA))
    assert normalize_trc(diagram_to_trc(d, GEN_SCHEMA)) == normalize_trc(q)
    assert load_json(emit_json(d)) == d
    ET.fromstring(emit_svg(d))
