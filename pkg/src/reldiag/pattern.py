"""Shattered queries and pattern isomorphism.

Shattering renames every extensional table to a fresh relation (``R_1``, ``R_2``, ..)
so that each occurrence can hold its own data. Two queries are pattern-isomorphic
when some bijection between their fresh tables, mapping copies of a relation to
copies of the same relation, makes the shattered queries equivalent. Equivalence is
decided by the bounded oracle, so ISOMORPH verdicts hold up to that bound, except when
the two shattered queries have the same TRC normal form under a bijection: then they
are equivalent outright and no database is enumerated.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from .errors import CapacityError, SchemaError
from .evaluate import (Bound, OracleOptions, Result, _differs, compile_query, oracle_domains)
from .model import Database, Schema, count_databases, enumerate_databases
from .syntax import (Binding, DatalogProgram, Exists, FromItem, Join, Literal, Minus, Not, Product,
                     Project, RawTrcQuery, Rel, Rename, Rule, Select, SqlExists, SqlIn, SqlNot, SqlOr,
                     SqlQuantified, SqlQuery, SqlSelect, TrcQuery, TrcScope, UnionQuery, Union_,
                     language_of)
from .syntax import And, Atom, Or


@dataclass(frozen=True)
class ShatteredQuery:
    query: object
    signature: tuple[tuple[str, str], ...]  # (fresh name, base relation) in occurrence order
    schema: Schema

    def restore(self):
        """The original query (fresh names replaced by their base relations)."""
        return map_tables(self.query, dict(self.signature))


def map_tables(q, rename, trc_only: bool = False):
    """Apply ``rename`` to every extensional table, in occurrence order.

    ``rename`` is either a dict (names not in it are kept) or a callable that is called
    once per occurrence.
    """
    fn: Callable[[str], str] = (lambda n: rename.get(n, n)) if isinstance(rename, dict) else rename
    lang = language_of(q)
    if lang == "trc":
        if isinstance(q, TrcQuery):
            return TrcQuery(_map_scope(q.root, fn), q.output)
        if isinstance(q, RawTrcQuery):
            return RawTrcQuery(_map_formula(q.formula, fn), q.output)
        return UnionQuery(tuple(TrcQuery(_map_scope(c.root, fn), c.output) for c in q.cells))
    if lang == "datalog":
        return _map_datalog(q, fn)
    if lang == "sql":
        select = _map_select(q.select, fn) if q.select is not None else None
        return SqlQuery(q.head, select, tuple(_map_sql_pred(p, fn) for p in q.preds))
    if lang == "ra":
        return _map_ra(q, fn)
    raise TypeError(f"cannot rename tables of a {lang} query; convert it to TRC first")


def _map_scope(s: TrcScope, fn) -> TrcScope:
    vars_ = tuple(Binding(b.var, fn(b.relation)) for b in s.vars)
    return TrcScope(vars_, s.preds, tuple(_map_scope(c, fn) for c in s.negations))


def _map_formula(f, fn):
    if isinstance(f, Exists):
        vars_ = tuple(Binding(b.var, fn(b.relation)) for b in f.vars)
        return Exists(vars_, _map_formula(f.body, fn))
    if isinstance(f, Not):
        return Not(_map_formula(f.body, fn))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_map_formula(i, fn) for i in f.items))
    return f


def _map_datalog(p: DatalogProgram, fn) -> DatalogProgram:
    idbs = p.idbs
    rules = []
    for r in p.rules:
        body = []
        for item in r.body:
            if isinstance(item, Literal) and item.atom.pred not in idbs:
                item = Literal(Atom(fn(item.atom.pred), item.atom.args), item.negated)
            body.append(item)
        rules.append(Rule(r.head, tuple(body)))
    return DatalogProgram(tuple(rules), p.answer)


def _map_select(s: SqlSelect, fn) -> SqlSelect:
    from_ = tuple(FromItem(fn(i.table), i.name) for i in s.from_)
    return SqlSelect(s.columns, from_, tuple(_map_sql_pred(p, fn) for p in s.where), s.distinct)


def _map_sql_pred(p, fn):
    if isinstance(p, (SqlExists, SqlIn, SqlQuantified)):
        return replace(p, sub=_map_select(p.sub, fn))
    if isinstance(p, SqlNot):
        return SqlNot(tuple(_map_sql_pred(q, fn) for q in p.preds))
    if isinstance(p, SqlOr):
        return SqlOr(tuple(tuple(_map_sql_pred(q, fn) for q in b) for b in p.branches))
    return p


def _map_ra(e, fn):
    if isinstance(e, Rel):
        return Rel(fn(e.name), e.label)
    if isinstance(e, (Project, Select, Rename)):
        return replace(e, child=_map_ra(e.child, fn))
    if isinstance(e, (Product, Join, Minus, Union_)):
        left = _map_ra(e.left, fn)
        return replace(e, left=left, right=_map_ra(e.right, fn))
    raise TypeError(f"not an RA expression: {e!r}")


def _as_renamable(q):
    if language_of(q) == "diagram":
        from .diagram.build import diagram_to_trc
        return diagram_to_trc(q)
    return q


def shatter(q, schema: Schema) -> ShatteredQuery:
    """Give every extensional table its own relation ``<base>_<k>`` (k counts per base)."""
    q = _as_renamable(q)
    counters: Counter = Counter()
    signature: list[tuple[str, str]] = []
    taken = set(schema)

    def fresh(base: str) -> str:
        if base not in schema:
            raise SchemaError(f"unknown relation {base!r}")
        while True:
            counters[base] += 1
            name = f"{base}_{counters[base]}"
            if name not in taken:
                break
        taken.add(name)
        signature.append((name, base))
        return name

    out = map_tables(q, fresh)
    fresh_schema = Schema({name: schema.attrs(base) for name, base in signature})
    return ShatteredQuery(out, tuple(signature), fresh_schema)


# ---------------------------------------------------------------------------
# Pattern isomorphism
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Refutation:
    bijection: tuple[tuple[str, str], ...]
    database: Database
    left: Result
    right: Result

    def to_json(self) -> dict:
        out = {"bijection": [list(p) for p in self.bijection], "database": self.database.to_json()}
        for key, r in (("left", self.left), ("right", self.right)):
            out[key] = r if isinstance(r, bool) else r.to_json()["rows"]
        return out


@dataclass(frozen=True)
class PatternVerdict:
    kind: str  # ISOMORPH, NOT_ISOMORPH or UNDETERMINED
    bijection: tuple[tuple[str, str], ...] = ()
    bound: Optional[Bound] = None
    refutations: tuple[Refutation, ...] = ()
    reason: str = ""
    left: Optional[ShatteredQuery] = None
    right: Optional[ShatteredQuery] = None
    method: str = "oracle"  # or "normal-form" for an exact syntactic match

    @property
    def isomorph(self) -> bool:
        return self.kind == "ISOMORPH"

    def to_json(self) -> dict:
        out: dict = {"verdict": self.kind, "method": self.method}
        if self.bijection:
            out["bijection"] = [list(p) for p in self.bijection]
        if self.bound is not None:
            out["bound"] = self.bound.to_json()
        if self.refutations:
            out["refutations"] = [r.to_json() for r in self.refutations]
        if self.reason:
            out["reason"] = self.reason
        if self.left is not None:
            out["left_signature"] = [list(p) for p in self.left.signature]
            out["right_signature"] = [list(p) for p in self.right.signature]
        return out


def bijections(left: Sequence[tuple[str, str]], right: Sequence[tuple[str, str]]):
    """Base-preserving bijections, lexicographic in signature order of ``left``."""
    bases = list(dict.fromkeys(b for _, b in left))
    lnames = {b: [n for n, x in left if x == b] for b in bases}
    rnames = {b: [n for n, x in right if x == b] for b in bases}
    per_base = [list(itertools.permutations(rnames[b])) for b in bases]
    for choice in itertools.product(*per_base):
        pairs = {}
        for b, perm in zip(bases, choice):
            pairs.update(zip(lnames[b], perm))
        yield tuple((n, pairs[n]) for n, _ in left)


def pattern_iso(q1, q2, schema: Schema, opts: OracleOptions = OracleOptions(),
                normal_form: bool = True) -> PatternVerdict:
    """Search for a base-preserving bijection under which the shattered queries agree.

    With ``normal_form`` a bijection matching the TRC normal forms is accepted without
    enumeration; otherwise (or when none matches) the bounded oracle decides.

    All bijections are checked side by side on one pass over the bounded databases;
    the first (lowest-index) survivor is reported.
    """
    s1, s2 = shatter(q1, schema), shatter(q2, schema)
    c1 = Counter(b for _, b in s1.signature)
    c2 = Counter(b for _, b in s2.signature)
    if c1 != c2:
        return PatternVerdict("NOT_ISOMORPH", reason=f"extensional tables differ: "
                              f"{_counts(c1)} vs {_counts(c2)}", left=s1, right=s2)
    candidates = list(bijections(s1.signature, s2.signature))
    match = _normal_form_match(s1, s2, candidates) if normal_form else None
    if match is not None:
        return PatternVerdict("ISOMORPH", match, reason="normal forms coincide under the bijection",
                              left=s1, right=s2, method="normal-form")
    renamed = [map_tables(s2.query, {b: a for a, b in h}) for h in candidates]
    try:
        domain, attr_domains, strings = oracle_domains([s1.query] + renamed, s1.schema, opts)
        total = count_databases(s1.schema, domain, opts.max_rows, attr_domains)
        if total > opts.ceiling:
            raise CapacityError(f"{total} databases exceed the ceiling of {opts.ceiling}")
    except CapacityError as exc:
        return PatternVerdict("UNDETERMINED", reason=str(exc), left=s1, right=s2)
    bound = Bound(opts.k, opts.max_rows, tuple(domain), total, strings)
    left = compile_query(s1.query, s1.schema)
    alive = {i: compile_query(r, s1.schema) for i, r in enumerate(renamed)}
    refuted: dict[int, Refutation] = {}
    for db in enumerate_databases(s1.schema, domain, opts.max_rows, opts.ceiling, attr_domains):
        r1 = left.run(db)
        for i in list(alive):
            r2 = alive[i].run(db)
            if _differs(r1, r2):
                refuted[i] = Refutation(candidates[i], db, r1, r2)
                del alive[i]
        if not alive:
            break
    if alive:
        return PatternVerdict("ISOMORPH", candidates[min(alive)], bound, left=s1, right=s2)
    return PatternVerdict("NOT_ISOMORPH", bound=bound,
                          refutations=tuple(refuted[i] for i in sorted(refuted)), left=s1, right=s2)


def _normal_form_match(s1: ShatteredQuery, s2: ShatteredQuery, candidates):
    """First bijection under which both shattered queries normalize to the same TRC.

    Normalization only renames variables, reorders predicates and flips operands, so a
    match proves equivalence on every database. Queries without a single-cell TRC
    form are left to the oracle.
    """
    from .canon import normalize_trc
    from .errors import ReldiagError
    from .translate import to_trc
    try:
        t1 = to_trc(s1.query, s1.schema, full=True)
        t2 = to_trc(s2.query, s2.schema, full=True)
    except ReldiagError:
        return None
    if not (isinstance(t1, TrcQuery) and isinstance(t2, TrcQuery)):
        return None
    target = normalize_trc(t1)
    for h in candidates:
        if normalize_trc(map_tables(t2, {b: a for a, b in h})) == target:
            return h
    return None


def _counts(c: Counter) -> str:
    return ", ".join(f"{n}x{b}" for b, n in sorted(c.items())) or "none"


@dataclass
class PatternClasses:
    classes: list[list[int]]
    undetermined: list[tuple[int, int]] = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)  # (i, j) -> PatternVerdict

    def to_json(self, names: Optional[Sequence[str]] = None) -> dict:
        label = (lambda i: names[i]) if names is not None else (lambda i: i)
        return {"classes": [[label(i) for i in c] for c in self.classes],
                "undetermined": [[label(i), label(j)] for i, j in self.undetermined]}


def pattern_classes(queries: Sequence, schema: Schema, opts: OracleOptions = OracleOptions(),
                    normal_form: bool = True) -> PatternClasses:
    """Partition query indexes into pattern-isomorphism classes.

    Each query is compared with one representative per existing class (verdicts are
    memoized); a query that is undetermined against some class and isomorphic to none
    starts its own class and the undetermined pairs are reported.
    """
    out = PatternClasses([])
    for i, q in enumerate(queries):
        placed = False
        pending = []
        for cls in out.classes:
            j = cls[0]
            v = out.verdicts.get((j, i)) or pattern_iso(queries[j], q, schema, opts, normal_form)
            out.verdicts[(j, i)] = v
            if v.isomorph:
                cls.append(i)
                placed = True
                break
            if v.kind == "UNDETERMINED":
                pending.append((j, i))
        if not placed:
            out.classes.append([i])
            out.undetermined.extend(pending)
    return out
