"""Example corpus runner.

A corpus directory holds query files (``.sql``, ``.trc``, ``.dlg``, ``.ra``,
``.rdjson``), a ``schema.txt`` and one ``<file>.expect`` JSON sidecar per query.
Sub-directories are separate groups with their own schema. Recognised expectation
keys:

``tables``                extensional table count
``class``                 pattern class label; equal labels in a group must be
                          pattern-isomorphic, different labels must not be
``equivalent_to``         files that are oracle-equivalent to this one
``not_equivalent_to``     files the oracle must separate
``normal_form_as``        files with the same canonical TRC up to renaming
``cells``                 number of union cells of the canonical TRC form
``anchoring_violations``  number of unanchored predicates (TRC input)
``violations``            sorted validity condition numbers (diagram input)
``evaluations``           ``[{"database": file, "result": true/false/rows}]``
``translations``          ``{language: file}``; the translation must match the
                          file (Datalog and TRC after normalization, others as printed)
``full``                  parse in full mode (disjunction, union)
``options``               oracle overrides ``k``, ``max_rows``, ``ceiling``
"""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

from .canon import check_anchored, normalize_datalog, normalize_trc
from .config import Config
from .errors import ReldiagError, ValidityError
from .evaluate import OracleOptions, equiv_check, evaluate
from .model import Schema, parse_database, parse_schema
from .parsing import EXTENSIONS, parse_query, print_query
from .pattern import pattern_classes
from .syntax import TrcQuery, UnionQuery, extensional_tables, language_of
from .translate import to_trc, translate

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        out = {"check": self.name, "pass": self.passed}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class FileReport:
    file: str
    checks: list[Check] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        out = {"file": self.file, "pass": self.passed, "checks": [c.to_json() for c in self.checks]}
        if self.error:
            out["error"] = self.error
        return out


@dataclass
class CorpusReport:
    files: list[FileReport] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(not f.passed for f in self.files)

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def to_json(self) -> dict:
        return {"files": [f.to_json() for f in self.files], "skipped": list(self.skipped),
                "passed": len(self.files) - self.failed, "failed": self.failed}

    def to_text(self) -> str:
        lines = []
        for f in self.files:
            lines.append(f"{'PASS' if f.passed else 'FAIL'} {f.file}")
            if f.error:
                lines.append(f"  error: {f.error}")
            for c in f.checks:
                if not c.passed:
                    lines.append(f"  {c.name}: {c.detail}")
        for s in self.skipped:
            lines.append(f"SKIP {s} (no .expect sidecar)")
        lines.append(f"{len(self.files) - self.failed} passed, {self.failed} failed, "
                     f"{len(self.skipped)} skipped")
        return "\n".join(lines)


def shipped_corpus() -> str:
    """Path of the corpus bundled with the package."""
    return str(resources.files("reldiag").joinpath("corpus"))


class _Group:
    """One directory: schema, parsed queries and their expectations."""

    def __init__(self, directory: str, config: Config):
        self.dir = directory
        self.config = config
        with open(os.path.join(directory, "schema.txt"), encoding="utf-8") as f:
            self.schema: Schema = parse_schema(f.read())
        self.expect: dict[str, dict] = {}
        self.skipped: list[str] = []
        for name in sorted(os.listdir(directory)):
            ext = os.path.splitext(name)[1]
            if ext not in EXTENSIONS:
                continue
            sidecar = os.path.join(directory, name + ".expect")
            if not os.path.exists(sidecar):
                log.warning("no expectation sidecar for %s, skipping", name)
                self.skipped.append(name)
                continue
            with open(sidecar, encoding="utf-8") as f:
                self.expect[name] = json.load(f)
        self._queries: dict[str, object] = {}

    def query(self, name: str):
        if name not in self._queries:
            exp = self.expect.get(name, {})
            lang = exp.get("lang") or EXTENSIONS[os.path.splitext(name)[1]]
            with open(os.path.join(self.dir, name), encoding="utf-8") as f:
                text = f.read()
            full = exp.get("full", self.config.full)
            self._queries[name] = parse_query(text, lang, self.schema, full=full)
        return self._queries[name]

    def options(self, *names: str) -> OracleOptions:
        opts = self.config.oracle
        for n in names:
            o = self.expect.get(n, {}).get("options", {})
            opts = replace(opts, **{k: o[k] for k in ("k", "max_rows", "ceiling") if k in o})
        return opts

    def trc(self, name: str):
        full = self.expect.get(name, {}).get("full", self.config.full)
        return to_trc(self.query(name), self.schema, full=full, dnf_limit=self.config.dnf_limit)

    def read(self, name: str) -> str:
        with open(os.path.join(self.dir, name), encoding="utf-8") as f:
            return f.read()


def _normal_trc(q):
    if isinstance(q, UnionQuery):
        return UnionQuery(tuple(normalize_trc(c) for c in q.cells))
    return normalize_trc(q)


def _file_checks(g: _Group, name: str) -> list[Check]:
    exp = g.expect[name]
    q = g.query(name)
    checks: list[Check] = []
    if "tables" in exp:
        source = q
        if language_of(q) == "diagram":
            n = q.table_count()
        else:
            n = len(extensional_tables(source, g.schema))
        checks.append(Check("tables", n == exp["tables"], f"expected {exp['tables']}, found {n}"))
    if "violations" in exp:
        from .diagram.validate import validate_diagram
        found = sorted({v.condition for v in validate_diagram(q, g.schema)})
        checks.append(Check("violations", found == sorted(exp["violations"]),
                            f"expected {sorted(exp['violations'])}, found {found}"))
    if "anchoring_violations" in exp:
        n = len(check_anchored(q)) if isinstance(q, TrcQuery) else 0
        checks.append(Check("anchoring", n == exp["anchoring_violations"],
                            f"expected {exp['anchoring_violations']}, found {n}"))
    if "cells" in exp:
        t = g.trc(name)
        n = len(t.cells) if isinstance(t, UnionQuery) else 1
        checks.append(Check("cells", n == exp["cells"], f"expected {exp['cells']}, found {n}"))
    for other in exp.get("equivalent_to", ()):
        v = equiv_check(q, g.query(other), g.schema, g.options(name))
        checks.append(Check(f"equivalent_to {other}", v.equivalent, v.kind))
    for other in exp.get("not_equivalent_to", ()):
        v = equiv_check(q, g.query(other), g.schema, g.options(name))
        checks.append(Check(f"not_equivalent_to {other}", not v.equivalent, v.kind))
    for other in exp.get("normal_form_as", ()):
        a, b = _normal_trc(g.trc(name)), _normal_trc(g.trc(other))
        checks.append(Check(f"normal_form_as {other}", a == b,
                            "" if a == b else f"{print_query(a)}\n!=\n{print_query(b)}"))
    for ev in exp.get("evaluations", ()):
        db = parse_database(g.read(ev["database"]), g.schema)
        r = evaluate(q, db)
        got = r if isinstance(r, bool) else sorted(list(row) for row in r.rows)
        want = ev["result"] if isinstance(ev["result"], bool) else sorted(ev["result"])
        checks.append(Check(f"evaluate {ev['database']}", got == want, f"expected {want}, got {got}"))
    for lang, target in sorted(exp.get("translations", {}).items()):
        out = translate(q, lang, g.schema, full=exp.get("full", g.config.full), dnf_limit=g.config.dnf_limit)
        want = parse_query(g.read(target), lang, g.schema, full=True)
        if lang == "datalog":
            out, want = normalize_datalog(out), normalize_datalog(want)
        elif lang == "trc":
            out, want = _normal_trc(out), _normal_trc(want)
        ok = print_query(out) == print_query(want)
        checks.append(Check(f"translate to {lang}", ok, "" if ok else print_query(out)))
    return checks


def _class_checks(g: _Group, names: list[str]) -> dict[str, Check]:
    labelled = [n for n in names if "class" in g.expect[n]]
    if not labelled:
        return {}
    result = pattern_classes([g.query(n) for n in labelled], g.schema, g.options(*labelled))
    found = {labelled[i]: ci for ci, cls in enumerate(result.classes) for i in cls}
    out = {}
    for n in labelled:
        same_label = {m for m in labelled if g.expect[m]["class"] == g.expect[n]["class"]}
        same_class = {m for m in labelled if found[m] == found[n]}
        ok = same_label == same_class
        detail = "" if ok else f"expected class with {sorted(same_label)}, found {sorted(same_class)}"
        out[n] = Check("class", ok, detail)
    return out


def run_group(directory: str, config: Config, root: str) -> tuple[list[FileReport], list[str]]:
    try:
        g = _Group(directory, config)
    except (OSError, ReldiagError, json.JSONDecodeError) as exc:
        rel = os.path.relpath(directory, root)
        return [FileReport(rel, error=f"cannot load group: {exc}")], []
    names = sorted(g.expect)
    reports = {n: FileReport(os.path.relpath(os.path.join(directory, n), root)) for n in names}
    for n in names:
        try:
            reports[n].checks.extend(_file_checks(g, n))
        except (ReldiagError, OSError, ValueError, TypeError) as exc:
            reports[n].error = f"{type(exc).__name__}: {exc}"
    try:
        for n, c in _class_checks(g, names).items():
            reports[n].checks.append(c)
    except (ReldiagError, ValueError, TypeError) as exc:
        for n in names:
            if "class" in g.expect[n]:
                reports[n].error = f"{type(exc).__name__}: {exc}"
    skipped = [os.path.relpath(os.path.join(directory, s), root) for s in g.skipped]
    return [reports[n] for n in names], skipped


def _groups(root: str) -> list[str]:
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        if "schema.txt" in filenames:
            out.append(dirpath)
        elif any(os.path.splitext(f)[1] in EXTENSIONS for f in filenames):
            log.warning("%s has query files but no schema.txt, skipping", dirpath)
    return sorted(out)


def run_corpus(directory: str, config: Config = Config()) -> CorpusReport:
    """Check every expectation under ``directory``; groups may run in parallel.

    The report is ordered by file name regardless of scheduling.
    """
    groups = _groups(directory)
    report = CorpusReport()
    if config.jobs > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(run_group, groups, [config] * len(groups), [directory] * len(groups)))
    else:
        results = [run_group(d, config, directory) for d in groups]
    for files, skipped in results:
        report.files.extend(files)
        report.skipped.extend(skipped)
    report.files.sort(key=lambda f: f.file)
    report.skipped.sort()
    return report
