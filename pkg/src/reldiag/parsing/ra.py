"""Relational algebra in prefix syntax: parser, attribute resolution and printer.

Examples::

    Minus(R, Product(Project[A](R), S))
    Select[A = B and C > 1](T)
    Join[R.B = S.B](R, S)          theta join
    Join(R, Minus(Project[B](R), S))   natural join on shared attribute names
    Rename[A->B](S)                attribute rename
    Rename[R->F](R)   or   R as F  qualifier (table alias) rename

Columns carry a qualifier (the relation or alias they come from) and a name.
Unqualified references must match exactly one column name; ambiguous references
are rejected and need a qualifier or a rename.
"""
from __future__ import annotations

from typing import Optional, Union

from ..errors import RaError, SchemaError, UnionInFragmentError
from ..model import Schema, format_value
from ..syntax import (ColRef, Join, Minus, Product, Project, RaCond, RaExpr, Rel, Rename, Select,
                      Union_, ra_children)
from .lexer import Parser

OPERATORS = ("project", "select", "product", "join", "minus", "rename", "union")
KEYWORDS = frozenset(OPERATORS + ("and", "as"))


class _RaParser(Parser):
    def __init__(self, text: str, full: bool):
        super().__init__(text, KEYWORDS)
        self.full = full

    def expr(self) -> RaExpr:
        t = self.tok
        if t.kind == "ident" and t.text.lower() in OPERATORS:
            op = t.text.lower()
            self.advance()
            return getattr(self, "op_" + op)(t)
        name = self.ident("relation name or operator")
        if self.accept_word("as"):
            return Rel(name, self.ident("alias"))
        return Rel(name)

    def _unary_arg(self) -> RaExpr:
        self.expect("(")
        e = self.expr()
        self.expect(")")
        return e

    def _binary_args(self) -> tuple[RaExpr, RaExpr]:
        self.expect("(")
        left = self.expr()
        self.expect(",")
        right = self.expr()
        self.expect(")")
        return left, right

    def colref(self) -> ColRef:
        first = self.ident("attribute")
        if self.accept("."):
            return ColRef(first, self.ident("attribute"))
        return ColRef(None, first)

    def cond(self) -> RaCond:
        if self.at_value():
            v = self.value()
            op = self.comp_op()
            return RaCond(self.colref(), op.flip(), v)
        left = self.colref()
        op = self.comp_op()
        right = self.value() if self.at_value() else self.colref()
        return RaCond(left, op, right)

    def conds(self) -> tuple[RaCond, ...]:
        self.expect("[")
        out = [self.cond()]
        while self.accept_word("and"):
            out.append(self.cond())
        self.expect("]")
        return tuple(out)

    def op_project(self, _t):
        self.expect("[")
        attrs = [self.colref()]
        while self.accept(","):
            attrs.append(self.colref())
        self.expect("]")
        return Project(tuple(attrs), self._unary_arg())

    def op_select(self, _t):
        conds = self.conds()
        return Select(conds, self._unary_arg())

    def op_product(self, _t):
        return Product(*self._binary_args())

    def op_join(self, _t):
        conds = self.conds() if self.at("[") else None
        return Join(conds, *self._binary_args())

    def op_minus(self, _t):
        return Minus(*self._binary_args())

    def op_union(self, t):
        if not self.full:
            raise UnionInFragmentError(f"{t.line}:{t.column}: Union is not part of the fragment "
                                       "(use full mode)")
        return Union_(*self._binary_args())

    def op_rename(self, _t):
        self.expect("[")
        pairs = []
        while True:
            src = self.ident("name")
            if self.accept("."):
                src += "." + self.ident("attribute")
            self.expect("->")
            pairs.append((src, self.ident("new name")))
            if not self.accept(","):
                break
        self.expect("]")
        return Rename(tuple(pairs), self._unary_arg())


def parse_ra(text: str, schema: Optional[Schema] = None, full: bool = False) -> RaExpr:
    p = _RaParser(text, full)
    e = p.expr()
    p.expect_eof()
    if schema is not None:
        ra_columns(e, schema)
    return e


# -- attribute resolution --------------------------------------------------------


def resolve(cols: list[ColRef], ref: ColRef) -> int:
    if ref.qualifier is not None:
        hits = [i for i, c in enumerate(cols) if c.qualifier == ref.qualifier and c.name == ref.name]
    else:
        hits = [i for i, c in enumerate(cols) if c.name == ref.name]
    if not hits:
        raise RaError(f"unknown attribute {ref} (available: {', '.join(map(str, cols))})")
    if len(hits) > 1:
        raise RaError(f"ambiguous attribute {ref}; qualify it or rename first")
    return hits[0]


def _no_duplicates(cols: list[ColRef], what: str) -> None:
    seen = set()
    for c in cols:
        if c in seen:
            raise RaError(f"{what} produces two columns named {c}; rename one operand first")
        seen.add(c)


def _check_cond(cols: list[ColRef], c: RaCond) -> None:
    resolve(cols, c.lhs)
    if isinstance(c.rhs, ColRef):
        resolve(cols, c.rhs)


def natural_join_layout(left: list[ColRef], right: list[ColRef]):
    """Pairs of (left index, right index) joined on equal names, and kept right indexes."""
    common = [n for n in dict.fromkeys(c.name for c in left) if n in {c.name for c in right}]
    pairs = []
    for n in common:
        li = [i for i, c in enumerate(left) if c.name == n]
        ri = [i for i, c in enumerate(right) if c.name == n]
        if len(li) != 1 or len(ri) != 1:
            raise RaError(f"natural join on {n} is ambiguous; rename first")
        pairs.append((li[0], ri[0]))
    joined = {r for _, r in pairs}
    keep = [i for i in range(len(right)) if i not in joined]
    return pairs, keep


def ra_columns(e: RaExpr, schema: Schema) -> list[ColRef]:
    """Output columns of ``e``; raises :class:`RaError` on resolution problems."""
    if isinstance(e, Rel):
        if e.name not in schema:
            raise SchemaError(f"unknown relation {e.name!r}")
        return [ColRef(e.label, a) for a in schema.attrs(e.name)]
    if isinstance(e, Project):
        cols = ra_columns(e.child, schema)
        out = [cols[resolve(cols, a)] for a in e.attrs]
        _no_duplicates(out, "projection")
        return out
    if isinstance(e, Select):
        cols = ra_columns(e.child, schema)
        for c in e.conds:
            _check_cond(cols, c)
        return cols
    if isinstance(e, Product):
        cols = ra_columns(e.left, schema) + ra_columns(e.right, schema)
        _no_duplicates(cols, "product")
        return cols
    if isinstance(e, Join):
        left, right = ra_columns(e.left, schema), ra_columns(e.right, schema)
        if e.conds is None:
            _, keep = natural_join_layout(left, right)
            cols = left + [right[i] for i in keep]
            _no_duplicates(cols, "join")
            return cols
        cols = left + right
        _no_duplicates(cols, "join")
        for c in e.conds:
            _check_cond(cols, c)
        return cols
    if isinstance(e, (Minus, Union_)):
        left, right = ra_columns(e.left, schema), ra_columns(e.right, schema)
        if [c.name for c in left] != [c.name for c in right]:
            kind = "difference" if isinstance(e, Minus) else "union"
            raise RaError(f"{kind} operands have different attributes: "
                          f"({', '.join(c.name for c in left)}) vs ({', '.join(c.name for c in right)})")
        return left
    if isinstance(e, Rename):
        cols = list(ra_columns(e.child, schema))
        for src, dst in e.mapping:
            cols = _apply_rename(cols, src, dst)
        _no_duplicates(cols, "rename")
        return cols
    raise TypeError(f"not an RA expression: {e!r}")


def _apply_rename(cols: list[ColRef], src: str, dst: str) -> list[ColRef]:
    if "." in src:
        q, a = src.split(".", 1)
        i = resolve(cols, ColRef(q, a))
        cols[i] = ColRef(cols[i].qualifier, dst)
        return cols
    by_name = [i for i, c in enumerate(cols) if c.name == src]
    by_qual = [i for i, c in enumerate(cols) if c.qualifier == src]
    if by_name and by_qual:
        raise RaError(f"rename {src}->{dst} is ambiguous between an attribute and a table name")
    if len(by_name) > 1:
        raise RaError(f"rename {src}->{dst} matches several attributes; qualify it")
    if by_name:
        i = by_name[0]
        cols[i] = ColRef(cols[i].qualifier, dst)
        return cols
    if by_qual:
        return [ColRef(dst, c.name) if c.qualifier == src else c for c in cols]
    raise RaError(f"rename source {src} matches no attribute or table")


# -- printing ------------------------------------------------------------------


def _cond_text(c: RaCond) -> str:
    rhs = str(c.rhs) if isinstance(c.rhs, ColRef) else format_value(c.rhs)
    return f"{c.lhs} {c.op.symbol} {rhs}"


def _label(e: RaExpr) -> str:
    if isinstance(e, Project):
        return f"Project[{', '.join(map(str, e.attrs))}]"
    if isinstance(e, Select):
        return f"Select[{' and '.join(_cond_text(c) for c in e.conds)}]"
    if isinstance(e, Join):
        if e.conds is None:
            return "Join"
        return f"Join[{' and '.join(_cond_text(c) for c in e.conds)}]"
    if isinstance(e, Rename):
        return f"Rename[{', '.join(f'{s}->{d}' for s, d in e.mapping)}]"
    return {Product: "Product", Minus: "Minus", Union_: "Union"}[type(e)]


def _flat(e: RaExpr) -> str:
    if isinstance(e, Rel):
        return f"{e.name} as {e.qualifier}" if e.qualifier else e.name
    return f"{_label(e)}({', '.join(_flat(c) for c in ra_children(e))})"


def _lines(e: RaExpr, depth: int, width: int) -> list[str]:
    flat = _flat(e)
    if isinstance(e, Rel) or len(flat) + 2 * depth <= width:
        return [flat]
    lines = [_label(e) + "("]
    kids = ra_children(e)
    for i, c in enumerate(kids):
        sub = _lines(c, depth + 1, width)
        sub[0] = "  " * (depth + 1) + sub[0]
        if i < len(kids) - 1:
            sub[-1] += ","
        lines.extend(sub)
    lines.append("  " * depth + ")")
    return lines


def print_ra(e: RaExpr, width: int = 72) -> str:
    return "\n".join(_lines(e, 0, width))
