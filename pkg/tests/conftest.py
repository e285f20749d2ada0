from __future__ import annotations

import os

import pytest

from reldiag.corpus import shipped_corpus
from reldiag.model import parse_database, parse_schema
from reldiag.parsing import EXTENSIONS, parse_query

CORPUS = shipped_corpus()


def corpus_path(group: str, name: str = "") -> str:
    return os.path.join(CORPUS, group, name)


def corpus_schema(group: str):
    with open(corpus_path(group, "schema.txt"), encoding="utf-8") as f:
        return parse_schema(f.read())


def corpus_query(group: str, name: str, full: bool = False):
    schema = corpus_schema(group)
    with open(corpus_path(group, name), encoding="utf-8") as f:
        text = f.read()
    return parse_query(text, EXTENSIONS[os.path.splitext(name)[1]], schema, full=full)


def corpus_db(group: str, name: str):
    with open(corpus_path(group, name), encoding="utf-8") as f:
        return parse_database(f.read(), corpus_schema(group))


def corpus_files(group: str) -> list[str]:
    return sorted(n for n in os.listdir(corpus_path(group)) if os.path.splitext(n)[1] in EXTENSIONS)


@pytest.fixture
def pattern_schema():
    return corpus_schema("three_patterns")


# Acceptance criteria: one PASS/FAIL line per ``@pytest.mark.criterion(n, title)`` test.
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and report.passed):
        return
    number, title = mark.args
    if report.when == "call" or report.failed:
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}  {title}")
