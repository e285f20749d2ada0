"""Diagram intermediate representation.

A diagram is a list of union cells. Each cell nests partitions (the root is the main
canvas, every child a dashed negation box) holding table boxes. A table box lists
attribute rows: a row with an operator and value is a selection, a plain row is the
attribute's join row. Join edges and the output box point at rows by
``(table id, row index)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from ..model import CompOp, Value

QUERY = "QUERY"
SENTENCE = "SENTENCE"


@dataclass(frozen=True)
class AttrRow:
    attr: str
    op: Optional[CompOp] = None
    value: Optional[Value] = None

    @property
    def is_selection(self) -> bool:
        return self.op is not None


@dataclass(frozen=True)
class TableBox:
    id: str
    relation: str
    rows: tuple[AttrRow, ...] = ()


@dataclass(frozen=True)
class Partition:
    id: str
    tables: tuple[TableBox, ...] = ()
    children: tuple["Partition", ...] = ()

    def walk(self, depth: int = 0) -> Iterator[tuple["Partition", int]]:
        yield self, depth
        for c in self.children:
            yield from c.walk(depth + 1)


@dataclass(frozen=True)
class RowRef:
    table: str
    row: int

    def __str__(self) -> str:
        return f"{self.table}[{self.row}]"


@dataclass(frozen=True)
class JoinEdge:
    """``source op target``; ``directed`` marks an arrow from source to target."""

    source: RowRef
    target: RowRef
    op: CompOp = CompOp.EQ
    directed: bool = False


@dataclass(frozen=True)
class OutputBox:
    name: str
    attrs: tuple[str, ...]
    links: tuple[RowRef, ...]  # one per attribute


@dataclass(frozen=True)
class Cell:
    root: Partition
    edges: tuple[JoinEdge, ...] = ()
    output: Optional[OutputBox] = None

    def partitions(self) -> list[tuple[Partition, int]]:
        return list(self.root.walk())

    def tables(self) -> list[tuple[TableBox, Partition]]:
        return [(t, p) for p, _ in self.root.walk() for t in p.tables]


@dataclass(frozen=True)
class Diagram:
    cells: tuple[Cell, ...]
    mode: str = QUERY

    @property
    def is_sentence(self) -> bool:
        return self.mode == SENTENCE

    def table_count(self) -> int:
        return sum(len(c.tables()) for c in self.cells)
