"""Tokenizer shared by the four front ends."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..errors import SourceError
from ..model import CompOp

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*$")

# Unicode spellings accepted as aliases of the ASCII tokens.
_UNICODE = {
    "¬": "not", "∃": "exists", "∈": "in", "∧": "and", "∨": "or",
    "≠": "!=", "≤": "<=", "≥": ">=", "←": ":-", "−": "-",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*|%[^\n]*|\#[^\n]*)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sq>'(?:[^']|'')*')
  | (?P<dq>"(?:[^"\\]|\\.)*")
  | (?P<op>:-|->|<=|>=|<>|!=|<|>|=)
  | (?P<punct>[()\[\]{},.|*;\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, op, punct, word (unicode keyword), eof
    text: str
    line: int
    column: int
    value: object = None

    def is_word(self, *words: str) -> bool:
        return self.kind in ("ident", "word") and self.text.lower() in words

    def __str__(self) -> str:
        return self.text if self.kind != "eof" else "end of input"


def tokenize(text: str, comments: bool = True) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        ch = text[pos]
        col = pos - line_start + 1
        if ch in _UNICODE:
            alias = _UNICODE[ch]
            kind = "word" if alias.isalpha() else ("punct" if alias == "-" else "op")
            tokens.append(Token(kind, alias, line, col))
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SourceError(f"unexpected character {ch!r}", line, col, ch)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "comment" and not comments:
            raise SourceError(f"unexpected character {ch!r}", line, col, ch)
        if kind == "number":
            tokens.append(Token("number", lexeme, line, col, int(lexeme)))
        elif kind == "ident":
            tokens.append(Token("ident", lexeme, line, col))
        elif kind == "sq":
            tokens.append(Token("string", lexeme, line, col, lexeme[1:-1].replace("''", "'")))
        elif kind == "dq":
            tokens.append(Token("string", lexeme, line, col, re.sub(r"\\(.)", r"\1", lexeme[1:-1])))
        elif kind in ("op", "punct"):
            tokens.append(Token(kind, lexeme, line, col))
        for i, c in enumerate(lexeme):
            if c == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    """Cursor over a token list with error helpers."""

    def __init__(self, text: str, keywords: frozenset = frozenset()):
        self.tokens = tokenize(text)
        self.pos = 0
        self.keywords = keywords

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None) -> SourceError:
        tok = tok or self.tok
        return SourceError(message, tok.line, tok.column, str(tok))

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "punct") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok}")
        return self.advance()

    def at_word(self, *words: str) -> bool:
        return self.tok.is_word(*words)

    def accept_word(self, *words: str) -> bool:
        if self.at_word(*words):
            self.advance()
            return True
        return False

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            raise self.error(f"expected {word.upper()}, found {self.tok}")
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "ident" or t.text.lower() in self.keywords or t.text.startswith("_"):
            raise self.error(f"expected {what}, found {t}")
        self.advance()
        return t.text

    def comp_op(self) -> CompOp:
        t = self.tok
        if t.kind != "op" or t.text in (":-", "->"):
            raise self.error(f"expected comparison operator, found {t}")
        self.advance()
        return CompOp.parse(t.text)

    def at_comp_op(self) -> bool:
        return self.tok.kind == "op" and self.tok.text not in (":-", "->")

    def value(self):
        """Number (optionally negative) or string literal."""
        t = self.tok
        if t.kind == "punct" and t.text == "-" and self.peek().kind == "number":
            self.advance()
            return -self.advance().value
        if t.kind in ("number", "string"):
            self.advance()
            return t.value
        raise self.error(f"expected a number or string, found {t}")

    def at_value(self) -> bool:
        t = self.tok
        return t.kind in ("number", "string") or (
            t.kind == "punct" and t.text == "-" and self.peek().kind == "number")

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok} after end of query")
