"""Text front ends and pretty-printers for the four query languages."""
from __future__ import annotations

from typing import Optional

from ..model import Schema
from .datalog import parse_datalog, print_datalog
from .ra import parse_ra, print_ra, ra_columns
from .sql import parse_sql, print_sql, print_sql_union
from .trc import parse_trc, print_trc

__all__ = ["EXTENSIONS", "parse_datalog", "parse_query", "print_datalog", "print_query", "parse_ra",
           "print_ra", "ra_columns", "parse_sql", "print_sql", "print_sql_union", "parse_trc", "print_trc"]

EXTENSIONS = {".sql": "sql", ".trc": "trc", ".dlg": "datalog", ".ra": "ra", ".rdjson": "diagram"}


def parse_query(text: str, lang: str, schema: Optional[Schema] = None, full: bool = False):
    if lang == "sql":
        return parse_sql(text, full=full)
    if lang == "trc":
        return parse_trc(text, schema, full=full)
    if lang == "datalog":
        return parse_datalog(text, schema)
    if lang == "ra":
        return parse_ra(text, schema, full=full)
    if lang == "diagram":
        from ..diagram.jsonio import load_json
        return load_json(text)
    raise ValueError(f"unknown language {lang!r}")


def print_query(q) -> str:
    """Text form of any query object (diagrams as JSON, SQL unions with UNION)."""
    from ..syntax import language_of
    if isinstance(q, tuple):
        return print_sql_union(q)
    lang = language_of(q)
    if lang == "sql":
        return print_sql(q)
    if lang == "trc":
        return print_trc(q)
    if lang == "datalog":
        return print_datalog(q)
    if lang == "ra":
        return print_ra(q)
    from ..diagram.jsonio import emit_json
    return emit_json(q).rstrip("\n")
