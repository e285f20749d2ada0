"""SQL fragment: recursive-descent parser and printer.

Main queries are ``SELECT DISTINCT cols FROM tables [WHERE P]``; sentences are
``SELECT NOT (P)`` or ``SELECT [NOT] EXISTS (S)``. Predicates are conjunctions of
comparisons, ``NOT (P)``, ``[NOT] EXISTS``, ``[NOT] IN`` and ``ALL``/``ANY``
subqueries. Full mode additionally accepts ``OR``.
"""
from __future__ import annotations

from typing import Optional

from ..errors import SourceError
from ..model import format_value
from ..syntax import (Column, FromItem, SqlComparison, SqlExists, SqlIn, SqlNot, SqlOr,
                      SqlPred, SqlQuantified, SqlQuery, SqlSelect)
from .lexer import Parser

KEYWORDS = frozenset({"select", "distinct", "from", "where", "and", "or", "not", "exists",
                      "in", "all", "any", "as", "some"})


class _SqlParser(Parser):
    def __init__(self, text: str, full: bool):
        super().__init__(text, KEYWORDS)
        self.full = full

    def query(self) -> SqlQuery:
        self.expect_word("select")
        if self.at_word("not") and self.peek().text == "(":
            self.advance()
            self.expect("(")
            preds = self.predicate()
            self.expect(")")
            q = SqlQuery("not", preds=preds)
        elif self.at_word("not", "exists"):
            negated = self.accept_word("not")
            self.expect_word("exists")
            q = SqlQuery("not exists" if negated else "exists", select=self.parenthesized_select())
        else:
            if not self.accept_word("distinct"):
                raise self.error("the main query must be SELECT DISTINCT")
            cols = self.columns()
            from_, where = self.from_where()
            q = SqlQuery("select", select=SqlSelect(tuple(cols), from_, where, True))
        self.accept(";")
        self.expect_eof()
        return q

    def columns(self) -> list[Column]:
        cols = [self.column()]
        while self.accept(","):
            cols.append(self.column())
        return cols

    def column(self) -> Column:
        first = self.ident("column")
        if self.accept("."):
            return Column(first, self.ident("attribute"))
        return Column(None, first)

    def from_where(self):
        self.expect_word("from")
        items = [self.table()]
        while self.accept(","):
            items.append(self.table())
        where: tuple = ()
        if self.accept_word("where"):
            where = self.predicate()
        return tuple(items), where

    def table(self) -> FromItem:
        name = self.ident("table name")
        if self.accept_word("as"):
            return FromItem(name, self.ident("alias"))
        if self.tok.kind == "ident" and self.tok.text.lower() not in KEYWORDS:
            return FromItem(name, self.ident("alias"))
        return FromItem(name)

    def subquery(self) -> SqlSelect:
        self.expect_word("select")
        distinct = self.accept_word("distinct")
        if self.accept("*"):
            cols = None
        else:
            cols = tuple(self.columns())
        from_, where = self.from_where()
        return SqlSelect(cols, from_, where, distinct)

    def parenthesized_select(self) -> SqlSelect:
        self.expect("(")
        s = self.subquery()
        self.expect(")")
        return s

    # P ::= conj {OR conj}; returns a conjunction as a tuple of predicates
    def predicate(self) -> tuple[SqlPred, ...]:
        branches = [self.conjunction()]
        while self.at_word("or"):
            if not self.full:
                raise self.error("OR is not part of the fragment (use full mode)")
            self.advance()
            branches.append(self.conjunction())
        if len(branches) == 1:
            return branches[0]
        return (SqlOr(tuple(branches)),)

    def conjunction(self) -> tuple[SqlPred, ...]:
        items = list(self.atom())
        while self.accept_word("and"):
            items.extend(self.atom())
        return tuple(items)

    def atom(self) -> tuple[SqlPred, ...]:
        if self.at_word("not"):
            nxt = self.peek()
            if nxt.text == "(":
                self.advance()
                self.expect("(")
                inner = self.predicate()
                self.expect(")")
                return (SqlNot(inner),)
            self.advance()
            self.expect_word("exists")
            return (SqlExists(self.parenthesized_select(), negated=True),)
        if self.accept_word("exists"):
            return (SqlExists(self.parenthesized_select()),)
        if self.at("("):
            if self.peek().kind == "ident" and self.peek().text.lower() not in KEYWORDS and \
                    self._tuple_ahead():
                return (self.tuple_in(),)
            self.advance()
            inner = self.predicate()
            self.expect(")")
            return inner
        return (self.column_predicate(),)

    def _tuple_ahead(self) -> bool:
        # "(C, C ...) [NOT] IN" -- scan to the matching parenthesis
        i, depth = self.pos, 0
        while i < len(self.tokens):
            t = self.tokens[i]
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    nxt = self.tokens[i + 1]
                    return nxt.is_word("in", "not")
            elif depth == 1 and t.kind == "ident" and t.text.lower() in KEYWORDS:
                return False
            elif depth == 1 and t.kind == "op":
                return False
            i += 1
        return False

    def tuple_in(self) -> SqlIn:
        self.expect("(")
        cols = self.columns()
        self.expect(")")
        negated = self.accept_word("not")
        self.expect_word("in")
        sub = self.parenthesized_select()
        return SqlIn(tuple(cols), sub, negated)

    def column_predicate(self) -> SqlPred:
        start = self.tok
        if self.at_value():
            raise self.error("a predicate must start with a column")
        col = self.column()
        if self.at_word("not", "in"):
            negated = self.accept_word("not")
            self.expect_word("in")
            return SqlIn((col,), self.parenthesized_select(), negated)
        op = self.comp_op()
        if self.at_word("all", "any", "some"):
            quant = "ALL" if self.advance().text.lower() == "all" else "ANY"
            return SqlQuantified(col, op, quant, self.parenthesized_select())
        if self.at_value():
            return SqlComparison(col, op, self.value())
        if self.tok.kind == "ident":
            return SqlComparison(col, op, self.column())
        raise SourceError(f"expected a column or value after {op.symbol}", self.tok.line,
                          self.tok.column, str(self.tok)) from None


def parse_sql(text: str, full: bool = False) -> SqlQuery:
    p = _SqlParser(text, full)
    return p.query()


# -- printing ------------------------------------------------------------------


def _operand(x) -> str:
    return str(x) if isinstance(x, Column) else format_value(x)


def _from_text(items) -> str:
    return ", ".join(f"{i.table} AS {i.alias}" if i.alias and i.alias != i.table else i.table
                     for i in items)


def _select_lines(s: SqlSelect, depth: int) -> list[str]:
    ind = "  " * depth
    cols = "*" if s.columns is None else ", ".join(map(str, s.columns))
    lines = [f"{ind}SELECT {'DISTINCT ' if s.distinct else ''}{cols}", f"{ind}FROM {_from_text(s.from_)}"]
    for i, p in enumerate(s.where):
        sub = _pred_lines(p, depth if i == 0 else depth + 1)
        lines.append(ind + ("WHERE " if i == 0 else "  AND ") + sub[0])
        lines.extend(sub[1:])
    return lines


def _subquery_lines(prefix: str, s: SqlSelect, depth: int) -> list[str]:
    inner = _select_lines(s, depth + 1)
    inner[-1] += ")"
    return [prefix + " ("] + inner


def _pred_lines(p: SqlPred, depth: int) -> list[str]:
    if isinstance(p, SqlComparison):
        return [f"{p.left} {p.op.symbol} {_operand(p.right)}"]
    if isinstance(p, SqlExists):
        return _subquery_lines("NOT EXISTS" if p.negated else "EXISTS", p.sub, depth)
    if isinstance(p, SqlIn):
        cols = str(p.columns[0]) if len(p.columns) == 1 else "(" + ", ".join(map(str, p.columns)) + ")"
        return _subquery_lines(f"{cols} {'NOT IN' if p.negated else 'IN'}", p.sub, depth)
    if isinstance(p, SqlQuantified):
        return _subquery_lines(f"{p.column} {p.op.symbol} {p.quantifier}", p.sub, depth)
    if isinstance(p, SqlNot):
        return _conj_block("NOT (", p.preds, depth)
    if isinstance(p, SqlOr):
        lines = ["("]
        ind = "  " * (depth + 1)
        for i, branch in enumerate(p.branches):
            for j, q in enumerate(branch):
                sub = _pred_lines(q, depth + 1)
                key = ("OR " if i else "") if j == 0 else "AND "
                lines.append(ind + key + sub[0])
                lines.extend(sub[1:])
        lines[-1] += ")"
        return lines
    raise TypeError(f"not a predicate: {p!r}")


def _conj_block(opener: str, preds, depth: int) -> list[str]:
    lines = [opener]
    ind = "  " * (depth + 1)
    for i, q in enumerate(preds):
        sub = _pred_lines(q, depth + 1)
        lines.append(ind + ("" if i == 0 else "AND ") + sub[0])
        lines.extend(sub[1:])
    lines[-1] += ")"
    return lines


def print_sql(q: SqlQuery) -> str:
    if q.head == "select":
        lines = _select_lines(q.select, 0)
    elif q.head == "not":
        lines = _conj_block("SELECT NOT (", q.preds, 0)
    else:
        lines = _subquery_lines("SELECT " + q.head.upper(), q.select, 0)
    return "\n".join(lines)


def print_sql_union(queries) -> str:
    """One parenthesized block per union member, joined by UNION."""
    blocks = []
    for q in queries:
        body = "\n".join("  " + line for line in print_sql(q).splitlines())
        blocks.append(f"(\n{body}\n)")
    return "\nUNION\n".join(blocks)
