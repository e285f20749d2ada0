"""Abstract syntax for the four query languages.

All nodes are frozen dataclasses holding tuples, so trees are hashable and can be
compared structurally. Concrete syntax lives in :mod:`reldiag.parsing`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import SchemaError
from .model import CompOp, Schema, Value

# ---------------------------------------------------------------------------
# Tuple relational calculus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttrRef:
    var: str
    attr: str

    def __str__(self) -> str:
        return f"{self.var}.{self.attr}"


Operand = Union[AttrRef, int, str]


@dataclass(frozen=True)
class TrcPred:
    """``lhs op rhs``; a join when ``rhs`` is an :class:`AttrRef`, a selection otherwise."""

    lhs: AttrRef
    op: CompOp
    rhs: Operand

    @property
    def is_join(self) -> bool:
        return isinstance(self.rhs, AttrRef)

    def refs(self) -> tuple[AttrRef, ...]:
        return (self.lhs, self.rhs) if self.is_join else (self.lhs,)

    def vars(self) -> set[str]:
        return {r.var for r in self.refs()}

    def flipped(self) -> TrcPred:
        assert isinstance(self.rhs, AttrRef)
        return TrcPred(self.rhs, self.op.flip(), self.lhs)

    def complemented(self) -> TrcPred:
        return TrcPred(self.lhs, self.op.complement(), self.rhs)


@dataclass(frozen=True)
class Binding:
    var: str
    relation: str


@dataclass(frozen=True)
class TrcScope:
    """One negation scope: ``exists vars [ preds and not(child) and ... ]``."""

    vars: tuple[Binding, ...] = ()
    preds: tuple[TrcPred, ...] = ()
    negations: tuple[TrcScope, ...] = ()

    def walk(self) -> Iterator[TrcScope]:
        yield self
        for child in self.negations:
            yield from child.walk()


@dataclass(frozen=True)
class OutputSpec:
    name: str
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class TrcQuery:
    """Canonical TRC*: quantifiers only at scope heads.

    ``output`` is ``None`` for sentences. Output bindings are root predicates of the
    form ``Q.A = r.B`` where ``Q`` is ``output.name``.
    """

    root: TrcScope
    output: Optional[OutputSpec] = None

    @property
    def is_sentence(self) -> bool:
        return self.output is None

    def output_bindings(self) -> dict[str, AttrRef]:
        if self.output is None:
            return {}
        out = {}
        for p in self.root.preds:
            if p.op is CompOp.EQ and p.is_join:
                if p.lhs.var == self.output.name and p.rhs.var != self.output.name:
                    out.setdefault(p.lhs.attr, p.rhs)
                elif p.rhs.var == self.output.name and p.lhs.var != self.output.name:
                    out.setdefault(p.rhs.attr, p.lhs)
        return out

    def is_output_pred(self, p: TrcPred) -> bool:
        return self.output is not None and any(r.var == self.output.name for r in p.refs())


# Unrestricted formulas: quantifiers anywhere, disjunction allowed (full mode).


@dataclass(frozen=True)
class Exists:
    vars: tuple[Binding, ...]
    body: "Formula"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...] = ()


Formula = Union[Exists, Not, And, Or, TrcPred]


@dataclass(frozen=True)
class RawTrcQuery:
    formula: Formula
    output: Optional[OutputSpec] = None

    @property
    def is_sentence(self) -> bool:
        return self.output is None


@dataclass(frozen=True)
class UnionQuery:
    """Union of OR-free cells sharing output name and attributes."""

    cells: tuple[TrcQuery, ...]

    def __post_init__(self):
        if not self.cells:
            raise ValueError("a union needs at least one cell")
        outs = {(c.output.name, c.output.attrs) if c.output else None for c in self.cells}
        if len(outs) != 1:
            raise ValueError("union cells must share output name and attributes")


def formula_has_or(f: Formula) -> bool:
    if isinstance(f, Or):
        return True
    if isinstance(f, (Exists, Not)):
        return formula_has_or(f.body)
    if isinstance(f, And):
        return any(formula_has_or(i) for i in f.items)
    return False


def scope_to_formula(scope: TrcScope) -> Formula:
    items: list[Formula] = list(scope.preds)
    items += [Not(scope_to_formula(c)) for c in scope.negations]
    body = And(tuple(items))
    if scope.vars:
        return Exists(scope.vars, body)
    return body


def trc_to_raw(q: TrcQuery) -> RawTrcQuery:
    return RawTrcQuery(scope_to_formula(q.root), q.output)


# ---------------------------------------------------------------------------
# Datalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    @property
    def anonymous(self) -> bool:
        return self.name.startswith("_")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Value


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    def vars(self) -> list[Var]:
        return [a for a in self.args if isinstance(a, Var)]


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False


@dataclass(frozen=True)
class Builtin:
    left: Term
    op: CompOp
    right: Term


BodyItem = Union[Literal, Builtin]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[BodyItem, ...]

    @property
    def positives(self) -> list[Atom]:
        return [b.atom for b in self.body if isinstance(b, Literal) and not b.negated]

    @property
    def negatives(self) -> list[Atom]:
        return [b.atom for b in self.body if isinstance(b, Literal) and b.negated]

    @property
    def builtins(self) -> list[Builtin]:
        return [b for b in self.body if isinstance(b, Builtin)]


@dataclass(frozen=True)
class DatalogProgram:
    rules: tuple[Rule, ...]
    answer: str

    @property
    def idbs(self) -> set[str]:
        return {r.head.pred for r in self.rules}

    def rule_for(self, pred: str) -> Optional[Rule]:
        for r in self.rules:
            if r.head.pred == pred:
                return r
        return None


# ---------------------------------------------------------------------------
# Relational algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColRef:
    qualifier: Optional[str]
    name: str

    def __str__(self) -> str:
        return f"{self.qualifier}.{self.name}" if self.qualifier else self.name


@dataclass(frozen=True)
class RaCond:
    lhs: ColRef
    op: CompOp
    rhs: Union[ColRef, int, str]


@dataclass(frozen=True)
class Rel:
    name: str
    qualifier: Optional[str] = None

    @property
    def label(self) -> str:
        return self.qualifier or self.name


@dataclass(frozen=True)
class Project:
    attrs: tuple[ColRef, ...]
    child: "RaExpr"


@dataclass(frozen=True)
class Select:
    conds: tuple[RaCond, ...]
    child: "RaExpr"


@dataclass(frozen=True)
class Product:
    left: "RaExpr"
    right: "RaExpr"


@dataclass(frozen=True)
class Join:
    """Theta join on ``conds``; natural join when ``conds`` is ``None``."""

    conds: Optional[tuple[RaCond, ...]]
    left: "RaExpr"
    right: "RaExpr"


@dataclass(frozen=True)
class Minus:
    left: "RaExpr"
    right: "RaExpr"


@dataclass(frozen=True)
class Rename:
    mapping: tuple[tuple[str, str], ...]
    child: "RaExpr"


@dataclass(frozen=True)
class Union_:
    left: "RaExpr"
    right: "RaExpr"


RaExpr = Union[Rel, Project, Select, Product, Join, Minus, Rename, Union_]


def ra_children(e: RaExpr) -> tuple:
    if isinstance(e, Rel):
        return ()
    if isinstance(e, (Project, Select, Rename)):
        return (e.child,)
    return (e.left, e.right)


# ---------------------------------------------------------------------------
# SQL
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    table: Optional[str]
    name: str

    def __str__(self) -> str:
        return f"{self.table}.{self.name}" if self.table else self.name


@dataclass(frozen=True)
class FromItem:
    table: str
    alias: Optional[str] = None

    @property
    def name(self) -> str:
        return self.alias or self.table


@dataclass(frozen=True)
class SqlComparison:
    left: Column
    op: CompOp
    right: Union[Column, int, str]


@dataclass(frozen=True)
class SqlNot:
    preds: tuple["SqlPred", ...]


@dataclass(frozen=True)
class SqlExists:
    sub: "SqlSelect"
    negated: bool = False


@dataclass(frozen=True)
class SqlIn:
    columns: tuple[Column, ...]
    sub: "SqlSelect"
    negated: bool = False


@dataclass(frozen=True)
class SqlQuantified:
    column: Column
    op: CompOp
    quantifier: str  # "ALL" or "ANY"
    sub: "SqlSelect"


@dataclass(frozen=True)
class SqlOr:
    """Disjunction of conjunctions (full mode only)."""

    branches: tuple[tuple["SqlPred", ...], ...]


SqlPred = Union[SqlComparison, SqlNot, SqlExists, SqlIn, SqlQuantified, SqlOr]


@dataclass(frozen=True)
class SqlSelect:
    """``SELECT [DISTINCT] cols FROM ... WHERE p1 AND p2 ...``; ``columns`` is ``None`` for ``*``."""

    columns: Optional[tuple[Column, ...]]
    from_: tuple[FromItem, ...]
    where: tuple[SqlPred, ...] = ()
    distinct: bool = False


@dataclass(frozen=True)
class SqlQuery:
    """A main query or a sentence.

    ``head`` is ``"select"`` (main query), ``"exists"``/``"not exists"`` (``select`` holds
    the subquery) or ``"not"`` (``preds`` holds the negated conjunction).
    """

    head: str
    select: Optional[SqlSelect] = None
    preds: tuple[SqlPred, ...] = ()

    @property
    def is_sentence(self) -> bool:
        return self.head != "select"


def sql_subqueries(p: SqlPred) -> list[SqlSelect]:
    if isinstance(p, (SqlExists, SqlIn, SqlQuantified)):
        return [p.sub]
    if isinstance(p, SqlNot):
        return [s for q in p.preds for s in sql_subqueries(q)]
    if isinstance(p, SqlOr):
        return [s for b in p.branches for q in b for s in sql_subqueries(q)]
    return []


# ---------------------------------------------------------------------------
# Extensional tables
# ---------------------------------------------------------------------------

Query = Union[TrcQuery, RawTrcQuery, UnionQuery, DatalogProgram, RaExpr, SqlQuery]


def _trc_scope_tables(scope: TrcScope, out: list) -> None:
    for b in scope.vars:
        out.append(b.relation)
    for child in scope.negations:
        _trc_scope_tables(child, out)


def _formula_tables(f: Formula, out: list) -> None:
    if isinstance(f, Exists):
        out.extend(b.relation for b in f.vars)
        _formula_tables(f.body, out)
    elif isinstance(f, Not):
        _formula_tables(f.body, out)
    elif isinstance(f, (And, Or)):
        for i in f.items:
            _formula_tables(i, out)


def _sql_select_tables(s: SqlSelect, out: list) -> None:
    out.extend(fi.table for fi in s.from_)
    for p in s.where:
        for sub in sql_subqueries(p):
            _sql_select_tables(sub, out)


def _ra_tables(e: RaExpr, out: list) -> None:
    if isinstance(e, Rel):
        out.append(e.name)
    for c in ra_children(e):
        _ra_tables(c, out)


def _datalog_tables(p: DatalogProgram, out: list) -> None:
    idbs = p.idbs
    for rule in p.rules:
        for item in rule.body:
            if isinstance(item, Literal) and item.atom.pred not in idbs:
                out.append(item.atom.pred)
    if not p.rules:
        out.append(p.answer)


def relation_occurrences(query: Query) -> list[str]:
    """Base relation of every extensional table, in occurrence order."""
    out: list[str] = []
    if isinstance(query, TrcQuery):
        _trc_scope_tables(query.root, out)
    elif isinstance(query, RawTrcQuery):
        _formula_tables(query.formula, out)
    elif isinstance(query, UnionQuery):
        for cell in query.cells:
            _trc_scope_tables(cell.root, out)
    elif isinstance(query, DatalogProgram):
        _datalog_tables(query, out)
    elif isinstance(query, SqlQuery):
        if query.select is not None:
            _sql_select_tables(query.select, out)
        for p in query.preds:
            for sub in sql_subqueries(p):
                _sql_select_tables(sub, out)
    elif isinstance(query, (Rel, Project, Select, Product, Join, Minus, Rename, Union_)):
        _ra_tables(query, out)
    else:
        raise TypeError(f"not a query: {type(query).__name__}")
    return out


def extensional_tables(query: Query, schema: Optional[Schema] = None) -> list[tuple[int, str]]:
    """Every appearance of a base relation as ``(occurrence-id, relation)``; ids start at 1.

    TRC bindings in pre-order of the scope tree, SQL FROM entries outer query first,
    Datalog EDB atoms by rule then body position, RA leaves left to right. IDB
    references and intermediate results are not counted.
    """
    rels = relation_occurrences(query)
    if schema is not None:
        for r in rels:
            if r not in schema:
                raise SchemaError(f"unknown relation {r!r}")
    return list(enumerate(rels, 1))


def language_of(query: Query) -> str:
    if isinstance(query, (TrcQuery, RawTrcQuery, UnionQuery)):
        return "trc"
    if isinstance(query, DatalogProgram):
        return "datalog"
    if isinstance(query, SqlQuery):
        return "sql"
    if isinstance(query, (Rel, Project, Select, Product, Join, Minus, Rename, Union_)):
        return "ra"
    from .diagram.model import Diagram  # local import: diagram depends on syntax
    if isinstance(query, Diagram):
        return "diagram"
    raise TypeError(f"not a query: {type(query).__name__}")
