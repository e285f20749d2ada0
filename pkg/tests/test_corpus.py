from __future__ import annotations

import json
import logging
import shutil

import pytest

from conftest import CORPUS, corpus_path
from reldiag.config import Config
from reldiag.corpus import run_corpus


def test_shipped_corpus_passes():
    report = run_corpus(CORPUS, Config(jobs=4))
    failures = [f.to_json() for f in report.files if not f.passed]
    assert failures == []
    assert len(report.files) >= 50
    assert report.skipped == []


def test_parallel_and_serial_agree():
    a = run_corpus(CORPUS, Config(jobs=1)).to_json()
    b = run_corpus(CORPUS, Config(jobs=3)).to_json()
    assert a == b


def _copy(tmp_path, group):
    target = tmp_path / group
    shutil.copytree(corpus_path(group), target)
    return target


@pytest.mark.parametrize("group,name,key,value,failures", [
    ("three_patterns", "g.dlg.expect", "tables", 3, 1),
    # a wrong class label also breaks the files it now claims to share a class with
    ("patterns", "q2.dlg.expect", "class", "same-attribute", 3),
    ("sailors", "all_sailors.trc.expect", "evaluations",
     [{"database": "everyone_red.db", "result": False}], 1),
    ("worked_example", "sibling_join.rdjson.expect", "violations", [3], 1),
])
def test_perturbed_expectation_fails(tmp_path, group, name, key, value, failures):
    d = _copy(tmp_path, group)
    path = d / name
    doc = json.loads(path.read_text())
    doc[key] = value
    path.write_text(json.dumps(doc))
    report = run_corpus(str(tmp_path))
    failed = [f.file for f in report.files if not f.passed]
    assert len(failed) == failures
    assert f"{group}/{name[:-len('.expect')]}" in failed


def test_empty_directory(tmp_path):
    report = run_corpus(str(tmp_path))
    assert report.files == [] and report.passed
    assert report.to_json() == {"files": [], "skipped": [], "passed": 0, "failed": 0}


def test_missing_sidecar_is_skipped(tmp_path, caplog):
    d = _copy(tmp_path, "patterns")
    (d / "q2.dlg.expect").unlink()
    (d / "q1.dlg.expect").write_text(json.dumps({"tables": 2}))
    (d / "q3.trc.expect").write_text(json.dumps({"tables": 2}))
    with caplog.at_level(logging.WARNING):
        report = run_corpus(str(tmp_path))
    assert report.skipped == ["patterns/q2.dlg"]
    assert report.passed
    assert "q2.dlg" in caplog.text
    assert report.to_text().splitlines()[-1] == "2 passed, 0 failed, 1 skipped"


def test_bad_query_is_reported_not_raised(tmp_path):
    d = _copy(tmp_path, "patterns")
    (d / "q1.dlg").write_text("Q(x) :- R(x, y), not S(z).")
    report = run_corpus(str(tmp_path))
    bad = {f.file: f for f in report.files}["patterns/q1.dlg"]
    assert not bad.passed and bad.error


def test_group_without_schema_is_ignored(tmp_path, caplog):
    d = _copy(tmp_path, "patterns")
    (d / "schema.txt").unlink()
    with caplog.at_level(logging.WARNING):
        report = run_corpus(str(tmp_path))
    assert report.files == []
    assert "no schema.txt" in caplog.text
