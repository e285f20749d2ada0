"""Tuple relational calculus: parser and printer.

Concrete syntax::

    { Q(A, B) | exists r in R, s in S [ Q.A = r.A and not exists t in T [ t.C = r.C ] ] }

Sentences drop the ``{ Q(..) | ... }`` wrapper. ``not ( ... )`` negates a scope
without quantified tables and ``[ ]`` is the empty conjunction. In full mode,
``or`` and ``{ ... } union { ... }`` are accepted as well.
"""
from __future__ import annotations

from typing import Optional, Union

from ..errors import SchemaError, ScopeError, SourceError
from ..model import Schema, format_value
from ..syntax import (And, AttrRef, Binding, Exists, Formula, Not, Or, OutputSpec,
                      RawTrcQuery, TrcPred, TrcQuery, TrcScope, UnionQuery, formula_has_or)
from .lexer import Parser

KEYWORDS = frozenset({"exists", "in", "and", "or", "not", "union"})


class _TrcParser(Parser):
    def __init__(self, text: str, schema: Optional[Schema], full: bool):
        super().__init__(text, KEYWORDS)
        self.schema = schema
        self.full = full
        self.output: Optional[OutputSpec] = None
        self.env: dict[str, str] = {}  # variable -> relation, for variables in scope

    def query(self):
        if not self.at("{"):
            f = self.formula_or_empty(None)
            self.expect_eof()
            return None, f
        parts = [self.braced()]
        while self.at_word("union"):
            if not self.full:
                raise self.error("UNION is only accepted in full mode")
            self.advance()
            parts.append(self.braced())
        self.expect_eof()
        if len(parts) == 1:
            return parts[0]
        return parts

    def braced(self):
        self.expect("{")
        name = self.ident("output name")
        self.expect("(")
        attrs = [self.ident("output attribute")]
        while self.accept(","):
            attrs.append(self.ident("output attribute"))
        self.expect(")")
        if len(set(attrs)) != len(attrs):
            raise self.error("duplicate output attribute")
        out = OutputSpec(name, tuple(attrs))
        if self.output is not None and self.output != out:
            raise self.error("union members must share output name and attributes")
        self.output = out
        self.expect("|")
        f = self.formula_or_empty("}")
        self.expect("}")
        return out, f

    def formula_or_empty(self, closer: Optional[str]) -> Formula:
        if (closer and self.at(closer)) or (closer is None and self.tok.kind == "eof"):
            return And(())
        return self.disjunction()

    def disjunction(self) -> Formula:
        items = [self.conjunction()]
        while self.at_word("or"):
            if not self.full:
                raise self.error("disjunction is not part of the fragment (use full mode)")
            self.advance()
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Formula:
        items = [self.unary()]
        while self.accept_word("and"):
            items.append(self.unary())
        if len(items) == 1:
            return items[0]
        flat = []
        for i in items:
            flat.extend(i.items if isinstance(i, And) else [i])
        return And(tuple(flat))

    def unary(self) -> Formula:
        if self.accept_word("not"):
            return Not(self.unary())
        if self.at_word("exists"):
            return self.exists()
        if self.accept("("):
            f = self.formula_or_empty(")")
            self.expect(")")
            return f
        if self.accept("["):
            f = self.formula_or_empty("]")
            self.expect("]")
            return f
        return self.predicate()

    def exists(self) -> Exists:
        self.expect_word("exists")
        bindings = []
        added = []
        while True:
            tok = self.tok
            var = self.ident("tuple variable")
            self.expect_word("in")
            rel_tok = self.tok
            rel = self.ident("relation name")
            if self.schema is not None and rel not in self.schema:
                raise SourceError(f"unknown relation {rel!r}", rel_tok.line, rel_tok.column, rel)
            if var in self.env or (self.output and var == self.output.name):
                raise SourceError(f"variable {var!r} is already bound", tok.line, tok.column, var)
            self.env[var] = rel
            added.append(var)
            bindings.append(Binding(var, rel))
            if not self.accept(","):
                break
        self.expect("[")
        body = self.formula_or_empty("]")
        self.expect("]")
        for v in added:
            del self.env[v]
        return Exists(tuple(bindings), body)

    def operand(self):
        if self.at_value():
            return self.value()
        tok = self.tok
        var = self.ident("tuple variable or value")
        self.expect(".")
        attr_tok = self.tok
        attr = self.ident("attribute")
        if self.output is not None and var == self.output.name:
            if attr not in self.output.attrs:
                raise SourceError(f"output has no attribute {attr!r}",
                                  attr_tok.line, attr_tok.column, attr)
        elif var not in self.env:
            raise ScopeError(var, tok.line, tok.column)
        elif self.schema is not None and attr not in self.schema.attrs(self.env[var]):
            raise SourceError(f"relation {self.env[var]} has no attribute {attr!r}",
                              attr_tok.line, attr_tok.column, attr)
        return AttrRef(var, attr)

    def predicate(self) -> TrcPred:
        tok = self.tok
        left = self.operand()
        op = self.comp_op()
        right = self.operand()
        if not isinstance(left, AttrRef):
            if not isinstance(right, AttrRef):
                raise SourceError("a predicate needs at least one attribute", tok.line, tok.column, str(left))
            left, right, op = right, left, op.flip()
        return TrcPred(left, op, right)


def parse_trc(text: str, schema: Optional[Schema] = None, full: bool = False
              ) -> Union[TrcQuery, RawTrcQuery, UnionQuery]:
    """Parse TRC text.

    Fragment mode returns a canonical :class:`TrcQuery`. Full mode returns a
    :class:`RawTrcQuery` when the text contains ``or``, a :class:`UnionQuery` for
    ``union`` and a canonical query otherwise.
    """
    from ..canon import check_safe, trc_pullup

    p = _TrcParser(text, schema, full)
    parsed = p.query()
    parts = parsed if isinstance(parsed, list) else [parsed]
    results = []
    for out, formula in parts:
        raw = RawTrcQuery(formula, out)
        if formula_has_or(formula):
            _check_output_placement(raw)
            results.append(raw)
        else:
            q = trc_pullup(raw)
            check_safe(q)
            results.append(q)
    if len(results) == 1:
        return results[0]
    if any(isinstance(r, RawTrcQuery) for r in results):
        from ..translate.disjunction import eliminate_disjunction
        cells = []
        for r in results:
            cells.extend(eliminate_disjunction(r).cells if isinstance(r, RawTrcQuery) else [r])
        return UnionQuery(tuple(cells))
    return UnionQuery(tuple(results))


def _check_output_placement(q: RawTrcQuery) -> None:
    """Output references may not occur under negation."""
    if q.output is None:
        return

    def walk(f, negated):
        if isinstance(f, TrcPred):
            if negated and any(r.var == q.output.name for r in f.refs()):
                raise SchemaError(f"output attribute referenced under negation: {format_pred(f)}")
        elif isinstance(f, Not):
            walk(f.body, True)
        elif isinstance(f, Exists):
            walk(f.body, negated)
        else:
            for i in f.items:
                walk(i, negated)

    walk(q.formula, False)


# -- printing ------------------------------------------------------------------


def format_operand(x) -> str:
    return str(x) if isinstance(x, AttrRef) else format_value(x)


def format_pred(p: TrcPred) -> str:
    return f"{p.lhs} {p.op.symbol} {format_operand(p.rhs)}"


def _head(scope: TrcScope) -> str:
    return "exists " + ", ".join(f"{b.var} in {b.relation}" for b in scope.vars)


def _scope_lines(scope: TrcScope, depth: int) -> list[str]:
    """Lines for a scope; the first line carries no indentation."""
    open_, close = ("[", "]") if scope.vars else ("(", ")")
    prefix = _head(scope) + " " if scope.vars else ""
    preds = [format_pred(p) for p in scope.preds]
    if not scope.negations:
        inner = " and ".join(preds)
        return [f"{prefix}{open_} {inner} {close}" if inner else f"{prefix}{open_} {close}"]
    lines = [prefix + open_]
    lines += _item_lines(preds, scope.negations, depth + 1)
    lines.append("  " * depth + close)
    return lines


def _item_lines(preds: list[str], negations, depth: int) -> list[str]:
    ind = "  " * depth
    lines = []
    first = True
    for p in preds:
        lines.append(ind + ("" if first else "and ") + p)
        first = False
    for child in negations:
        sub = _scope_lines(child, depth)
        lines.append(ind + ("" if first else "and ") + "not " + sub[0])
        lines.extend(sub[1:])
        first = False
    return lines


def _query_text(q: TrcQuery) -> str:
    root = q.root
    if root.vars:
        body = _scope_lines(root, 0)
    elif root.preds or root.negations:
        body = [line for line in _item_lines([format_pred(p) for p in root.preds], root.negations, 0)]
    else:
        body = ["[ ]"]
    if q.output is None:
        return "\n".join(body)
    head = f"{{ {q.output.name}({', '.join(q.output.attrs)}) | "
    if len(body) == 1:
        return head + body[0] + " }"
    # multi-line bodies: close brace after the last line
    return head + body[0] + "\n" + "\n".join(body[1:]) + " }"


def format_formula(f: Formula) -> str:
    if isinstance(f, TrcPred):
        return format_pred(f)
    if isinstance(f, Exists):
        head = ", ".join(f"{b.var} in {b.relation}" for b in f.vars)
        inner = format_formula(f.body) if not _empty(f.body) else ""
        return f"exists {head} [ {inner} ]" if inner else f"exists {head} [ ]"
    if isinstance(f, Not):
        if isinstance(f.body, Exists):
            return "not " + format_formula(f.body)
        return "not ( " + format_formula(f.body) + " )" if not _empty(f.body) else "not [ ]"
    if isinstance(f, Or):
        return "(" + " or ".join(format_formula(i) for i in f.items) + ")"
    if not f.items:
        return "[ ]"
    return " and ".join(format_formula(i) for i in f.items)


def _empty(f: Formula) -> bool:
    return isinstance(f, And) and not f.items


def print_trc(q: Union[TrcQuery, RawTrcQuery, UnionQuery]) -> str:
    if isinstance(q, UnionQuery):
        return "\nunion\n".join(_query_text(c) for c in q.cells)
    if isinstance(q, RawTrcQuery):
        body = format_formula(q.formula)
        if q.output is None:
            return body
        return f"{{ {q.output.name}({', '.join(q.output.attrs)}) | {body} }}"
    return _query_text(q)
