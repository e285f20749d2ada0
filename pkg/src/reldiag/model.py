"""Schemas, values, comparison operators and small-database enumeration."""
from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

from .errors import CapacityError, SchemaError, TypeFault

Value = Union[int, str]

DEFAULT_CEILING = 10**7


class CompOp(enum.Enum):
    EQ = "="
    NEQ = "!="
    LT = "<"
    LEQ = "<="
    GT = ">"
    GEQ = ">="

    @property
    def symbol(self) -> str:
        return self.value

    def flip(self) -> CompOp:
        """Operator to use when the operands swap sides."""
        return _FLIP[self]

    def complement(self) -> CompOp:
        """Logical negation of the operator."""
        return _COMPLEMENT[self]

    @property
    def symmetric(self) -> bool:
        return self in (CompOp.EQ, CompOp.NEQ)

    @classmethod
    def parse(cls, text: str) -> CompOp:
        try:
            return _SPELLINGS[text]
        except KeyError:
            raise ValueError(f"unknown comparison operator {text!r}") from None


_FLIP = {
    CompOp.EQ: CompOp.EQ, CompOp.NEQ: CompOp.NEQ,
    CompOp.LT: CompOp.GT, CompOp.GT: CompOp.LT,
    CompOp.LEQ: CompOp.GEQ, CompOp.GEQ: CompOp.LEQ,
}
_COMPLEMENT = {
    CompOp.EQ: CompOp.NEQ, CompOp.NEQ: CompOp.EQ,
    CompOp.LT: CompOp.GEQ, CompOp.GEQ: CompOp.LT,
    CompOp.GT: CompOp.LEQ, CompOp.LEQ: CompOp.GT,
}
_SPELLINGS = {
    "=": CompOp.EQ, "!=": CompOp.NEQ, "<>": CompOp.NEQ,
    "<": CompOp.LT, "<=": CompOp.LEQ, ">": CompOp.GT, ">=": CompOp.GEQ,
}


def check_value(v: object) -> Value:
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise TypeFault(f"values must be integers or strings, got {v!r}")
    return v


def value_key(v: Value) -> tuple:
    """Total order over mixed values: integers first, then strings by UTF-8 bytes."""
    if isinstance(v, int):
        return (0, v)
    return (1, v.encode("utf-8"))


def compare(left: Value, op: CompOp, right: Value) -> bool:
    if isinstance(left, bool) or isinstance(right, bool) or type(left) is not type(right):
        raise TypeFault(f"cannot compare {left!r} with {right!r}")
    if isinstance(left, str):
        left, right = left.encode("utf-8"), right.encode("utf-8")
    if op is CompOp.EQ:
        return left == right
    if op is CompOp.NEQ:
        return left != right
    if op is CompOp.LT:
        return left < right
    if op is CompOp.LEQ:
        return left <= right
    if op is CompOp.GT:
        return left > right
    return left >= right


def format_value(v: Value) -> str:
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    return str(v)


@dataclass(frozen=True)
class Schema:
    """Relation name -> ordered attribute names. Insertion order is the schema order."""

    relations: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        rels = {}
        for name, attrs in self.relations.items():
            attrs = tuple(attrs)
            if not attrs:
                raise SchemaError(f"relation {name} needs at least one attribute")
            if len(set(attrs)) != len(attrs):
                raise SchemaError(f"duplicate attribute in relation {name}")
            rels[name] = attrs
        object.__setattr__(self, "relations", rels)

    def __contains__(self, name: str) -> bool:
        return name in self.relations

    def __iter__(self):
        return iter(self.relations)

    def attrs(self, name: str) -> tuple[str, ...]:
        try:
            return self.relations[name]
        except KeyError:
            raise SchemaError(f"unknown relation {name!r}") from None

    def arity(self, name: str) -> int:
        return len(self.attrs(name))

    def index(self, name: str, attr: str) -> int:
        attrs = self.attrs(name)
        try:
            return attrs.index(attr)
        except ValueError:
            raise SchemaError(f"relation {name} has no attribute {attr!r}") from None

    def restrict(self, names) -> Schema:
        return Schema({n: self.relations[n] for n in self.relations if n in set(names)})

    def merge(self, other: Schema) -> Schema:
        rels = dict(self.relations)
        for name, attrs in other.relations.items():
            if name in rels and rels[name] != attrs:
                raise SchemaError(f"conflicting definitions for relation {name}")
            rels[name] = attrs
        return Schema(rels)

    def __str__(self) -> str:
        return "\n".join(f"{n}({', '.join(a)})" for n, a in self.relations.items())


@dataclass(frozen=True)
class Database:
    """Finite instance: relation name -> frozenset of positional tuples."""

    schema: Schema
    relations: Mapping[str, frozenset]

    def __post_init__(self):
        rels = {}
        for name in self.schema:
            rows = frozenset(tuple(r) for r in self.relations.get(name, ()))
            arity = self.schema.arity(name)
            for row in rows:
                if len(row) != arity:
                    raise SchemaError(f"tuple {row} does not fit {name}/{arity}")
                for v in row:
                    check_value(v)
            rels[name] = rows
        for name in self.relations:
            if name not in self.schema:
                raise SchemaError(f"unknown relation {name!r}")
        object.__setattr__(self, "relations", rels)

    def __getitem__(self, name: str) -> frozenset:
        try:
            return self.relations[name]
        except KeyError:
            raise SchemaError(f"unknown relation {name!r}") from None

    def rows_as_dicts(self, name: str) -> list[dict[str, Value]]:
        attrs = self.schema.attrs(name)
        return [dict(zip(attrs, row)) for row in sorted_rows(self[name])]

    def renamed(self, mapping: Mapping[str, str], schema: Schema) -> Database:
        """Copy with relation ``old`` stored under ``mapping[old]``."""
        return Database(schema, {mapping.get(n, n): rows for n, rows in self.relations.items()})

    def to_text(self) -> str:
        lines = []
        for name in self.schema:
            for row in sorted_rows(self[name]):
                lines.append(f"{name}({', '.join(_db_literal(v) for v in row)})")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {name: [list(r) for r in sorted_rows(self[name])] for name in self.schema}


def sorted_rows(rows) -> list[tuple]:
    return sorted(rows, key=lambda r: tuple(value_key(v) for v in r))


def _db_literal(v: Value) -> str:
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(v)


def sort_domain(domain: Sequence[Value]) -> list[Value]:
    return sorted({check_value(v) for v in domain}, key=value_key)


def _subset_count(n: int, max_rows: int) -> int:
    return sum(math.comb(n, i) for i in range(0, min(max_rows, n) + 1))


def count_databases(schema: Schema, domain: Sequence[Value], max_rows: int | Mapping[str, int],
                    attr_domains: Mapping[tuple[str, str], Sequence[Value]] | None = None) -> int:
    total = 1
    for name in schema:
        n = len(_tuple_space(schema, name, sort_domain(domain), attr_domains))
        total *= _subset_count(n, _max_for(max_rows, name))
    return total


def _max_for(max_rows, name: str) -> int:
    if isinstance(max_rows, Mapping):
        return max_rows[name]
    return max_rows


def _tuple_space(schema: Schema, name: str, values: list, attr_domains) -> list[tuple]:
    cols = []
    for attr in schema.attrs(name):
        if attr_domains is not None and (name, attr) in attr_domains:
            cols.append(sort_domain(attr_domains[(name, attr)]))
        else:
            cols.append(values)
    return list(itertools.product(*cols))


def _subsets(tuples: list[tuple], max_rows: int) -> list[frozenset]:
    """Subsets with at most ``max_rows`` members, in binary-counter order of their masks."""
    masks = []
    for size in range(min(max_rows, len(tuples)) + 1):
        for idx in itertools.combinations(range(len(tuples)), size):
            masks.append((sum(1 << i for i in idx), idx))
    masks.sort()
    return [frozenset(tuples[i] for i in idx) for _, idx in masks]


def enumerate_databases(schema: Schema, domain: Sequence[Value],
                        max_rows_per_relation: int | Mapping[str, int],
                        ceiling: int = DEFAULT_CEILING,
                        attr_domains: Mapping[tuple[str, str], Sequence[Value]] | None = None,
                        ) -> Iterator[Database]:
    """Yield every database over ``domain`` with at most ``max_rows_per_relation`` rows per relation.

    Relations vary in schema order with the last relation changing fastest; tuples are
    ordered lexicographically over the sorted domain and subsets follow a binary counter.
    ``max_rows_per_relation`` may be a single bound or a per-relation mapping.
    ``attr_domains`` optionally overrides the domain of individual ``(relation, attribute)``
    columns, which keeps string-typed columns apart from integer ones.
    """
    values = sort_domain(domain)
    if not values:
        raise ValueError("domain must be non-empty")
    names = list(schema)
    for name in names:
        if _max_for(max_rows_per_relation, name) < 0:
            raise ValueError("max_rows_per_relation must be >= 0")
    total = count_databases(schema, values, max_rows_per_relation, attr_domains)
    if total > ceiling:
        raise CapacityError(f"{total} database instances exceed the ceiling of {ceiling}")
    return _generate(schema, names, values, max_rows_per_relation, attr_domains)


def _generate(schema, names, values, max_rows, attr_domains):
    choices = []
    for name in names:
        tuples = _tuple_space(schema, name, values, attr_domains)
        choices.append(_subsets(tuples, _max_for(max_rows, name)))
    for combo in itertools.product(*choices):
        yield Database(schema, dict(zip(names, combo)))


# -- text formats -----------------------------------------------------------

_SCHEMA_LINE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_]*)\s*\(\s*(.*?)\s*\)\s*\.?\s*$")
_IDENT = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


def _strip_comment(line: str) -> str:
    out, quote = [], None
    for ch in line:
        if quote:
            out.append(ch)
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            out.append(ch)
        elif ch == "#":
            break
        else:
            out.append(ch)
    return "".join(out).strip()


def parse_schema(text: str) -> Schema:
    """Parse ``R(A, B)`` lines; blank lines and ``#`` comments are ignored."""
    rels: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _SCHEMA_LINE.match(line)
        if not m:
            raise SchemaError(f"line {lineno}: expected R(A, B), got {raw.strip()!r}")
        name, body = m.groups()
        attrs = tuple(a.strip() for a in body.split(",")) if body else ()
        for a in attrs:
            if not _IDENT.match(a):
                raise SchemaError(f"line {lineno}: bad attribute name {a!r}")
        if name in rels:
            raise SchemaError(f"line {lineno}: relation {name} declared twice")
        rels[name] = attrs
    return Schema(rels)


_TOKEN = re.compile(r'\s*(?:(-?\d+)|"((?:[^"\\]|\\.)*)"|\'((?:[^\']|\'\')*)\')\s*(,|$)')


def _parse_row_values(body: str, lineno: int) -> tuple:
    values, pos = [], 0
    if not body.strip():
        return ()
    while pos < len(body):
        m = _TOKEN.match(body, pos)
        if not m:
            raise SchemaError(f"line {lineno}: bad value list {body!r}")
        num, dq, sq, _sep = m.groups()
        if num is not None:
            values.append(int(num))
        elif dq is not None:
            values.append(re.sub(r"\\(.)", r"\1", dq))
        else:
            values.append(sq.replace("''", "'"))
        pos = m.end()
    return tuple(values)


def parse_database(text: str, schema: Schema) -> Database:
    """Parse ``R(1, "red")`` lines into a database over ``schema``."""
    rels: dict[str, set] = {name: set() for name in schema}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _SCHEMA_LINE.match(line)
        if not m:
            raise SchemaError(f"line {lineno}: expected R(v1, ...), got {raw.strip()!r}")
        name, body = m.groups()
        if name not in schema:
            raise SchemaError(f"line {lineno}: unknown relation {name!r}")
        row = _parse_row_values(body, lineno)
        if len(row) != schema.arity(name):
            raise SchemaError(f"line {lineno}: {name} expects {schema.arity(name)} values")
        rels[name].add(row)
    return Database(schema, {n: frozenset(r) for n, r in rels.items()})
