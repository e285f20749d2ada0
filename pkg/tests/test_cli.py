from __future__ import annotations

import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from importlib import resources

import jsonschema
import pytest

from conftest import corpus_path
from reldiag.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report_schema() -> dict:
    return json.loads(resources.files("reldiag").joinpath("schemas/report.schema.json").read_text("utf-8"))


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    doc = json.loads(out)
    jsonschema.validate(doc, report_schema())
    assert doc["command"] == argv[0]
    return code, doc


def test_translate_to_ra(capsys):
    code, out, _ = run(capsys, "translate", corpus_path("three_patterns", "g.dlg"), "--to", "ra")
    assert code == 0
    assert out.strip() == "Minus(R, Project[A, B](Product(S, Project[A](R))))"
    assert out.count("R") + out.count("S") == 3


def test_translate_writes_file(capsys, tmp_path):
    target = tmp_path / "g.sql"
    code, out, _ = run(capsys, "translate", corpus_path("three_patterns", "g.dlg"), "--to", "sql", "-o", str(target))
    assert code == 0
    assert "SELECT" in target.read_text()


def test_diagram_svg_to_file(capsys, tmp_path):
    target = tmp_path / "nested.svg"
    code, _, _ = run(capsys, "diagram", corpus_path("worked_example", "nested.trc"), "-o", str(target))
    assert code == 0
    root = ET.parse(target).getroot()
    assert root.tag.endswith("svg")


def test_diagram_json_loads_back(capsys):
    from reldiag.diagram import load_json
    code, out, _ = run(capsys, "diagram", corpus_path("three_patterns", "g.dlg"), "--emit", "json")
    assert code == 0
    assert load_json(out).table_count() == 2


def test_pattern_iso(capsys):
    code, out, _ = run(capsys, "pattern-iso", corpus_path("patterns", "q1.dlg"),
                       corpus_path("patterns", "q3.trc"), "--bound", "2")
    assert code == 0
    assert out.splitlines()[0] == "ISOMORPH"


def test_pattern_iso_oracle_only(capsys):
    code, doc = run_json(capsys, "pattern-iso", corpus_path("patterns", "q1.dlg"),
                         corpus_path("patterns", "q3.trc"), "--oracle-only")
    assert code == 0
    assert doc["result"]["verdict"] == "ISOMORPH"
    assert doc["result"]["method"] == "oracle"


@pytest.mark.parametrize("argv,code", [
    (("equiv", "three_patterns/a.dlg", "three_patterns/b.ra"), 0),
    (("equiv", "three_patterns/b.ra", "sqlvariety/h.sql"), 2),
    (("pattern-iso", "patterns/q1.dlg", "patterns/q2.dlg"), 1),
    (("validate", "worked_example/nested.rdjson"), 0),
    (("validate", "worked_example/sibling_join.rdjson"), 1),
    (("validate", "worked_example/empty_canvas.rdjson"), 1),
    (("canon", "anchoring/double_negation.trc"), 1),
    (("canon", "sqlvariety/b.sql"), 0),
    (("parse", "three_patterns/missing.dlg"), 2),
    (("eval", "sailors/all_sailors.trc", "--db", "sailors/everyone_red.db"), 0),
])
def test_exit_codes(capsys, argv, code):
    cmd, *files = argv
    args = [cmd] + [corpus_path(*f.split("/")) if "/" in f and not f.startswith("-") else f for f in files]
    assert run(capsys, *args)[0] == code


def test_counterexample_is_negative(capsys):
    code, doc = run_json(capsys, "equiv", corpus_path("sqlvariety", "b.sql"), corpus_path("sqlvariety", "h.sql"))
    assert code == 1
    assert doc["status"] == "negative"
    assert doc["result"]["verdict"] == "COUNTEREXAMPLE"


def test_mixed_schema_groups_are_an_input_error(capsys):
    code, _, err = run(capsys, "equiv", corpus_path("three_patterns", "b.ra"), corpus_path("sqlvariety", "h.sql"))
    assert code == 2
    assert err.startswith("reldiag: error:")


@pytest.mark.parametrize("argv", [
    ("bogus",),
    ("translate", "x.dlg"),
    ("eval", "x.trc"),
    ("diagram", "x.trc", "--emit", "png"),
])
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "usage:" in err


def test_missing_schema(capsys, tmp_path):
    q = tmp_path / "q.trc"
    q.write_text("{ Q(A) | exists r in R [ Q.A = r.A ] }")
    code, _, err = run(capsys, "parse", str(q))
    assert code == 2
    assert "schema" in err


def test_error_envelope(capsys):
    code, doc = run_json(capsys, "parse", corpus_path("three_patterns", "missing.dlg"))
    assert code == 2
    assert doc["status"] == "error"


@pytest.mark.parametrize("argv", [
    ("parse", "three_patterns/g.dlg"),
    ("canon", "sqlvariety/c.sql"),
    ("canon", "anchoring/complemented.trc"),
    ("translate", "three_patterns/g.dlg", "--to", "trc"),
    ("translate", "disjunction_or/or.sql", "--to", "sql", "--full"),
    ("eval", "sailors/all_sailors.trc", "--db", "sailors/one_green_only.db"),
    ("equiv", "three_patterns/a.dlg", "three_patterns/d.dlg"),
    ("pattern-iso", "patterns/q1.dlg", "patterns/q3.trc"),
    ("pattern-classes", "three_patterns"),
    ("diagram", "worked_example/nested.trc"),
    ("validate", "worked_example/sibling_join.rdjson"),
    ("corpus", "patterns"),
])
def test_json_envelopes_match_schema_and_are_deterministic(capsys, argv):
    cmd, *rest = argv
    args = [cmd] + [corpus_path(*a.split("/")) if "/" in a or a in ("three_patterns", "patterns") else a for a in rest]
    first = run_json(capsys, *args)
    second = run_json(capsys, *args)
    assert first == second


def test_pattern_classes_three_patterns(capsys):
    code, doc = run_json(capsys, "pattern-classes", corpus_path("three_patterns"))
    assert code == 0
    assert len(doc["result"]["classes"]) == 3
    assert doc["result"]["bound"]["k"] == 2


def test_config_file_and_environment(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_rows": 2, "k": 3}))
    files = (corpus_path("three_patterns", "a.dlg"), corpus_path("three_patterns", "b.ra"))
    _, doc = run_json(capsys, "equiv", *files, "--config", str(cfg))
    assert (doc["result"]["bound"]["k"], doc["result"]["bound"]["max_rows"]) == (3, 2)
    monkeypatch.setenv("RELDIAG_CONFIG", str(cfg))
    _, doc = run_json(capsys, "equiv", *files, "--max-rows", "1")
    assert (doc["result"]["bound"]["k"], doc["result"]["bound"]["max_rows"]) == (3, 1)


@pytest.mark.parametrize("content", ['{"k": 0}', '{"colour": 1}', "[1]", "{"])
def test_bad_config_is_input_error(capsys, tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    code, _, err = run(capsys, "parse", corpus_path("three_patterns", "g.dlg"), "--config", str(cfg))
    assert code == 2
    assert "config" in err or "must be" in err


def test_stdin_with_lang(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("{ Q(A) | exists r in R [ Q.A = r.A ] }"))
    code, out, _ = run(capsys, "parse", "-", "--lang", "trc", "--schema", corpus_path("three_patterns", "schema.txt"))
    assert code == 0
    assert out.strip() == "{ Q(A) | exists r in R [ Q.A = r.A ] }"


def test_corpus_command(capsys):
    code, out, _ = run(capsys, "corpus", corpus_path("patterns"))
    assert code == 0
    assert out.strip().endswith("3 passed, 0 failed, 0 skipped")


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "reldiag.cli", "translate", corpus_path("three_patterns", "g.dlg"),
                           "--to", "ra"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("Minus(")
