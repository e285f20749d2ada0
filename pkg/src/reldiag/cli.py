"""Command-line driver.

Exit codes: 0 success, 1 negative verdict (counterexample, not isomorphic, validity
or anchoring violations, corpus failures), 2 input errors. With ``--json`` every
command prints one ``{"command", "status", "result"}`` object on stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from .canon import check_anchored, normalize_datalog, normalize_trc
from .config import Config, load_config
from .errors import AnchoringError, ReldiagError
from .evaluate import Relation, equiv_check, evaluate
from .model import Schema, format_value, parse_database, parse_schema
from .parsing import EXTENSIONS, parse_query, print_query
from .pattern import pattern_classes, pattern_iso
from .syntax import RawTrcQuery, TrcQuery, UnionQuery, extensional_tables, language_of
from .translate import LANGUAGES, canonicalize_sql, to_trc, translate

OK, NEGATIVE, INPUT_ERROR = 0, 1, 2


class InputError(ReldiagError):
    """Bad invocation: missing file, unknown language, no schema."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(INPUT_ERROR)


# -- input helpers ------------------------------------------------------------


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _language(path: str, override: Optional[str]) -> str:
    if override:
        return override
    lang = EXTENSIONS.get(os.path.splitext(path)[1])
    if lang is None:
        raise InputError(f"cannot tell the language of {path}; use --lang")
    return lang


def _schema(args, paths: Sequence[str], required: bool = True) -> Optional[Schema]:
    path = args.schema
    if path is None:
        for p in paths:
            if p != "-":
                candidate = os.path.join(os.path.dirname(os.path.abspath(p)), "schema.txt")
                if os.path.exists(candidate):
                    path = candidate
                    break
    if path is None:
        if required:
            raise InputError("no schema: pass --schema or put schema.txt next to the input")
        return None
    return parse_schema(_read(path))


def _load(args, path: str, schema: Optional[Schema]):
    return parse_query(_read(path), _language(path, args.lang), schema, full=args.config_obj.full)


def _config(args) -> Config:
    cfg = load_config(args.config)
    return cfg.override(k=args.bound, max_rows=args.max_rows, ceiling=args.ceiling,
                        dnf_limit=args.dnf_limit, full=True if args.full else None,
                        jobs=getattr(args, "jobs", None))


def _query_files(paths: Sequence[str]) -> list[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(os.path.join(p, n) for n in sorted(os.listdir(p))
                       if os.path.splitext(n)[1] in EXTENSIONS)
        else:
            out.append(p)
    return out


def _relation_text(r) -> str:
    if isinstance(r, bool):
        return "true" if r else "false"
    lines = [", ".join(r.attrs)]
    lines.extend(", ".join(format_value(v) for v in row) for row in r)
    return "\n".join(lines)


def _result_json(r):
    return r if isinstance(r, bool) else r.to_json()


# -- commands -------------------------------------------------------------------
# Each returns (status, result for --json, text for plain output).


def cmd_parse(args):
    lang = _language(args.file, args.lang)
    schema = _schema(args, [args.file], required=lang in ("trc", "ra"))
    q = _load(args, args.file, schema)
    text = print_query(q)
    tables = extensional_tables(q, schema) if language_of(q) != "diagram" else \
        [(i + 1, t.relation) for i, (t, _) in enumerate(t for c in q.cells for t in c.tables())]
    result = {"language": lang, "text": text, "extensional_tables": [list(t) for t in tables]}
    return "ok", result, text


def cmd_canon(args):
    lang = _language(args.file, args.lang)
    schema = _schema(args, [args.file])
    q = _load(args, args.file, schema)
    try:
        if lang == "sql" and not args.config_obj.full:
            out = canonicalize_sql(q, schema)
        elif lang == "datalog":
            out = normalize_datalog(q)
        else:
            t = to_trc(q, schema, args.config_obj.full, args.config_obj.dnf_limit)
            violations = check_anchored(t) if isinstance(t, TrcQuery) else []
            if violations:
                raise AnchoringError(violations)
            out = normalize_trc(t) if isinstance(t, TrcQuery) else t
    except AnchoringError as exc:
        found = [{"scope": v.scope, "predicate": str(v).rsplit(" in scope ", 1)[0]} for v in exc.violations]
        text = "\n".join(f"unanchored: {v}" for v in exc.violations)
        return "negative", {"language": lang, "violations": found}, text
    text = print_query(out)
    return "ok", {"language": language_of(out) if not isinstance(out, tuple) else "sql",
                  "text": text, "violations": []}, text


def cmd_translate(args):
    schema = _schema(args, [args.file])
    q = _load(args, args.file, schema)
    cfg = args.config_obj
    out = translate(q, args.to, schema, cfg.full, cfg.dnf_limit)
    text = print_query(out)
    result = {"from": _language(args.file, args.lang), "to": args.to, "text": text}
    if args.output:
        _write(args.output, text + "\n")
        result["output"] = args.output
        return "ok", result, None
    return "ok", result, text


def cmd_eval(args):
    schema = _schema(args, [args.file, args.db])
    q = _load(args, args.file, schema)
    if args.config_obj.full and isinstance(q, RawTrcQuery):
        q = to_trc(q, schema, True, args.config_obj.dnf_limit)
    db = parse_database(_read(args.db), schema)
    r = evaluate(q, db)
    return "ok", {"result": _result_json(r)}, _relation_text(r)


def _prepare(q, schema, cfg):
    # the oracle compiles canonical TRC; raw disjunctive input is expanded first
    if isinstance(q, RawTrcQuery):
        return to_trc(q, schema, True, cfg.dnf_limit)
    return q


def cmd_equiv(args):
    schema = _schema(args, [args.left, args.right])
    cfg = args.config_obj
    q1 = _prepare(_load(args, args.left, schema), schema, cfg)
    q2 = _prepare(_load(args, args.right, schema), schema, cfg)
    v = equiv_check(q1, q2, schema, cfg.oracle)
    lines = [v.kind, f"bound: {v.bound.describe()}"]
    if not v.equivalent:
        lines += ["database:", v.database.to_text() or "(empty)",
                  f"{args.left}:", _relation_text(v.left), f"{args.right}:", _relation_text(v.right)]
    return ("ok" if v.equivalent else "negative"), v.to_json(), "\n".join(lines)


def cmd_pattern_iso(args):
    schema = _schema(args, [args.left, args.right])
    cfg = args.config_obj
    q1 = _prepare(_load(args, args.left, schema), schema, cfg)
    q2 = _prepare(_load(args, args.right, schema), schema, cfg)
    v = pattern_iso(q1, q2, schema, cfg.oracle, normal_form=not args.oracle_only)
    lines = [v.kind]
    if v.bijection:
        lines.append("bijection: " + ", ".join(f"{a} -> {b}" for a, b in v.bijection))
    if v.bound is not None:
        lines.append(f"bound: {v.bound.describe()}")
    if v.reason:
        lines.append(v.reason)
    if v.kind == "NOT_ISOMORPH" and v.refutations:
        lines.append(f"{len(v.refutations)} bijection(s) refuted")
    return ("ok" if v.isomorph else "negative"), v.to_json(), "\n".join(lines)


def cmd_pattern_classes(args):
    files = _query_files(args.paths)
    if not files:
        raise InputError("no query files given")
    schema = _schema(args, files)
    cfg = args.config_obj
    queries = [_prepare(_load(args, f, schema), schema, cfg) for f in files]
    names = [os.path.basename(f) for f in files]
    if len(set(names)) < len(names):
        names = list(files)
    pc = pattern_classes(queries, schema, cfg.oracle, normal_form=not args.oracle_only)
    result = pc.to_json(names)
    result["bound"] = {"k": cfg.k, "max_rows": cfg.max_rows, "ceiling": cfg.ceiling}
    lines = [f"class {i + 1}: " + ", ".join(names[j] for j in c) for i, c in enumerate(pc.classes)]
    lines += [f"undetermined: {names[i]} vs {names[j]}" for i, j in pc.undetermined]
    return "ok", result, "\n".join(lines)


def cmd_diagram(args):
    from .diagram import emit_json, emit_svg, trc_to_diagram
    lang = _language(args.file, args.lang)
    schema = _schema(args, [args.file], required=lang != "diagram")
    q = _load(args, args.file, schema)
    if lang == "diagram":
        d = q
    else:
        d = trc_to_diagram(to_trc(q, schema, args.config_obj.full, args.config_obj.dnf_limit), schema)
    text = emit_svg(d) if args.emit == "svg" else emit_json(d)
    result = {"format": args.emit, "cells": len(d.cells), "tables": d.table_count()}
    if args.output:
        _write(args.output, text)
        result["output"] = args.output
        return "ok", result, None
    result["text"] = text
    return "ok", result, text.rstrip("\n")


def cmd_validate(args):
    from .diagram import load_json, validate_diagram
    schema = _schema(args, [args.file], required=False)
    d = load_json(_read(args.file))
    violations = validate_diagram(d, schema)
    result = {"valid": not violations, "violations": [v.to_json() for v in violations]}
    text = "\n".join(str(v) for v in violations) if violations else "valid"
    return ("negative" if violations else "ok"), result, text


def cmd_corpus(args):
    from .corpus import run_corpus, shipped_corpus
    directory = args.directory or shipped_corpus()
    if not os.path.isdir(directory):
        raise InputError(f"{directory} is not a directory")
    report = run_corpus(directory, args.config_obj)
    return ("ok" if report.passed else "negative"), report.to_json(), report.to_text()


# -- argument parsing -------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--schema", help="schema file (default: schema.txt next to the input)")
    p.add_argument("--lang", choices=LANGUAGES, help="input language (default: from the file extension)")
    p.add_argument("--full", action="store_true", help="accept disjunction and union (full mode)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--config", help="JSON config file (default: $RELDIAG_CONFIG)")
    p.add_argument("--bound", "-k", type=int, help="oracle domain size")
    p.add_argument("--max-rows", type=int, help="oracle rows per relation")
    p.add_argument("--ceiling", type=int, help="largest number of databases the oracle enumerates")
    p.add_argument("--dnf-limit", type=int, help="largest number of disjuncts after expansion")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="reldiag", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    add("parse", cmd_parse, "parse and pretty-print a query").add_argument("file")
    add("canon", cmd_canon, "canonical form and anchoring check").add_argument("file")
    p = add("translate", cmd_translate, "translate between languages")
    p.add_argument("file")
    p.add_argument("--from", dest="from_", choices=LANGUAGES, help="alias of --lang")
    p.add_argument("--to", required=True, choices=LANGUAGES)
    p.add_argument("-o", "--output")
    p = add("eval", cmd_eval, "evaluate a query on a database")
    p.add_argument("file")
    p.add_argument("--db", required=True, help="database file")
    for name, fn, help_ in (("equiv", cmd_equiv, "bounded equivalence check"),
                            ("pattern-iso", cmd_pattern_iso, "pattern isomorphism check")):
        p = add(name, fn, help_)
        p.add_argument("left")
        p.add_argument("right")
        if name == "pattern-iso":
            p.add_argument("--oracle-only", action="store_true",
                           help="decide by enumeration even when the normal forms match")
    p = add("pattern-classes", cmd_pattern_classes, "group queries into pattern classes")
    p.add_argument("paths", nargs="+", help="query files or directories")
    p.add_argument("--oracle-only", action="store_true",
                   help="decide by enumeration even when the normal forms match")
    p = add("diagram", cmd_diagram, "draw a query as a diagram")
    p.add_argument("file")
    p.add_argument("--emit", choices=("svg", "json"), default="svg")
    p.add_argument("-o", "--output")
    add("validate", cmd_validate, "check the validity conditions of a diagram file").add_argument("file")
    p = add("corpus", cmd_corpus, "run an example corpus against its expectations")
    p.add_argument("directory", nargs="?", help="corpus directory (default: the shipped corpus)")
    p.add_argument("--jobs", "-j", type=int, help="worker processes")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "from_", None):
        if args.lang and args.lang != args.from_:
            parser.error("--from and --lang disagree")
        args.lang = args.from_
    try:
        args.config_obj = _config(args)
        status, result, text = args.fn(args)
    except (ReldiagError, ValueError) as exc:
        print(f"reldiag: error: {exc}", file=sys.stderr)
        if args.json:
            _print_json(args.command, "error", {"error": str(exc)})
        return INPUT_ERROR
    if args.json:
        _print_json(args.command, status, result)
    elif text is not None:
        print(text)
    return OK if status == "ok" else NEGATIVE


def _print_json(command: str, status: str, result) -> None:
    print(json.dumps({"command": command, "status": status, "result": result}, indent=2))


if __name__ == "__main__":
    sys.exit(main())
