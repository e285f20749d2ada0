"""Translations between the query languages.

:func:`translate` routes any supported query to a target language. Directions that
have no direct construction go through TRC (SQL, diagrams) or Datalog (RA).
"""
from __future__ import annotations

from ..errors import TranslationError
from ..model import Schema
from ..syntax import RawTrcQuery, SqlQuery, TrcQuery, UnionQuery, formula_has_or, language_of
from .disjunction import DNF_LIMIT, eliminate_disjunction
from .ra_datalog import datalog_to_ra, ra_to_datalog
from .sql_trc import canonicalize_sql, sql_to_trc, trc_to_sql
from .trc_datalog import datalog_to_trc, repaired_trc, trc_to_datalog

LANGUAGES = ("sql", "trc", "datalog", "ra", "diagram")

__all__ = ["LANGUAGES", "canonicalize_sql", "datalog_to_ra", "datalog_to_trc", "eliminate_disjunction",
           "ra_to_datalog", "repaired_trc", "sql_to_trc", "to_trc", "translate", "trc_to_datalog",
           "trc_to_sql"]


def to_trc(q, schema: Schema, full: bool = False, dnf_limit: int = DNF_LIMIT):
    """Canonical TRC; a disjunctive input (full mode) becomes a union when it needs several cells."""
    lang = language_of(q)
    if lang == "sql":
        q = sql_to_trc(q, schema, full=full)
    elif lang == "datalog":
        return datalog_to_trc(q, schema)
    elif lang == "ra":
        return datalog_to_trc(ra_to_datalog(q, schema), schema)
    elif lang == "diagram":
        from ..diagram.build import diagram_to_trc
        return diagram_to_trc(q, schema)
    if isinstance(q, RawTrcQuery):
        if formula_has_or(q.formula) and not full:
            raise TranslationError("disjunction is outside the fragment; use full mode")
        q = eliminate_disjunction(q, dnf_limit)
    if isinstance(q, UnionQuery) and len(q.cells) == 1:
        return q.cells[0]
    return q


def _single(q: TrcQuery | UnionQuery, target: str) -> TrcQuery:
    if isinstance(q, UnionQuery):
        raise TranslationError(f"a union of {len(q.cells)} cells has no {target} form in the fragment")
    return q


def translate(q, to: str, schema: Schema, full: bool = False, dnf_limit: int = DNF_LIMIT):
    """Translate ``q`` into language ``to``.

    SQL targets of unions come back as a tuple of :class:`SqlQuery` (one per cell).
    """
    if to not in LANGUAGES:
        raise ValueError(f"unknown target language {to!r}; expected one of {', '.join(LANGUAGES)}")
    lang = language_of(q)
    if to == "trc":
        return to_trc(q, schema, full, dnf_limit)
    if to == "sql":
        if lang == "sql" and not full:
            return canonicalize_sql(q, schema)
        t = to_trc(q, schema, full, dnf_limit)
        if isinstance(t, UnionQuery):
            return tuple(trc_to_sql(c) for c in t.cells)
        return trc_to_sql(t)
    if to == "datalog":
        if lang == "datalog":
            return q
        if lang == "ra":
            return ra_to_datalog(q, schema)
        return trc_to_datalog(_single(to_trc(q, schema, full, dnf_limit), "Datalog"), schema)
    if to == "ra":
        if lang == "ra":
            return q
        return datalog_to_ra(translate(q, "datalog", schema, full, dnf_limit), schema)
    from ..diagram.build import trc_to_diagram
    if lang == "diagram":
        return q
    return trc_to_diagram(to_trc(q, schema, full, dnf_limit), schema)


def is_sql_union(obj) -> bool:
    return isinstance(obj, tuple) and all(isinstance(x, SqlQuery) for x in obj)
