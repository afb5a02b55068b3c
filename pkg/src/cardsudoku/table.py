"""Face-down stacks, marked matrices and the shuffle-based sub-protocols.

Shuffles move whole stacks, like envelopes being scrambled, and the drawn
permutation never leaves this module.  Every public action goes through the
``emit`` callback of :class:`Table`, which is how transcripts get built.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .cards import CardId

Pos = tuple[int, int]
Emit = Callable[[str, dict], None]


class ProtocolStateError(RuntimeError):
    """The physical table is in a state the requested step cannot start from."""


class Stack:
    """Cards piled on one matrix position, top card first, all face-down."""

    __slots__ = ("cards",)

    def __init__(self, cards: Iterable[CardId] = ()) -> None:
        self.cards: list[CardId] = list(cards)

    def __repr__(self) -> str:
        return f"Stack({', '.join(map(str, self.cards))})"

    @property
    def encoding(self) -> CardId:
        return self.cards[-1]

    @property
    def top(self) -> CardId:
        return self.cards[0]

    def push(self, card: CardId) -> None:
        self.cards.insert(0, card)

    def pop(self) -> CardId:
        return self.cards.pop(0)

    def turn(self, depth: int) -> CardId:
        """Show the card at ``depth`` and put it face-down again."""
        return self.cards[depth]


class MarkedMatrix:
    """A k x l grid of stacks bordered by marking cards.

    ``row_marks`` sit in Column 0 and travel with their rows; ``col_marks``
    sit in Row 0 and travel with their columns.  Either may be empty.
    ``sources`` records the board cell each stack came from and, like the
    home bookkeeping, is only for assertions and the prover's own memory.
    """

    def __init__(
        self,
        cells: Sequence[Sequence[Stack]],
        row_marks: Sequence[CardId] = (),
        col_marks: Sequence[CardId] = (),
        sources: Sequence[Sequence[Pos]] | None = None,
    ) -> None:
        self.cells: list[list[Stack]] = [list(row) for row in cells]
        self.k = len(self.cells)
        self.l = len(self.cells[0]) if self.cells else 0
        if any(len(row) != self.l for row in self.cells):
            raise ValueError("ragged matrix")
        if row_marks and len(row_marks) != self.k:
            raise ValueError(f"need {self.k} row marks, got {len(row_marks)}")
        if col_marks and len(col_marks) != self.l:
            raise ValueError(f"need {self.l} column marks, got {len(col_marks)}")
        self.row_marks: list[CardId | None] = list(row_marks)
        self.col_marks: list[CardId | None] = list(col_marks)
        self.marks_face_up = False
        self._row_rank = {c: i for i, c in enumerate(row_marks)}
        self._col_rank = {c: i for i, c in enumerate(col_marks)}
        self.sources = [list(r) for r in sources] if sources is not None else None
        self._row_home = list(range(self.k))
        self._col_home = list(range(self.l))

    @classmethod
    def from_board(
        cls,
        board: dict[Pos, Stack],
        cells: Sequence[Sequence[Pos]],
        row_marks: Sequence[CardId] = (),
        col_marks: Sequence[CardId] = (),
    ) -> "MarkedMatrix":
        return cls([[board[c] for c in row] for row in cells], row_marks, col_marks, cells)

    @property
    def shape(self) -> tuple[int, int]:
        return self.k, self.l

    def positions(self) -> list[Pos]:
        return [(i, j) for i in range(self.k) for j in range(self.l)]

    def __getitem__(self, pos: Pos) -> Stack:
        return self.cells[pos[0]][pos[1]]

    # hidden bookkeeping -----------------------------------------------------
    def home_of(self, pos: Pos) -> Pos:
        return self._row_home[pos[0]], self._col_home[pos[1]]

    def in_home_order(self) -> bool:
        return self._row_home == list(range(self.k)) and self._col_home == list(range(self.l))

    def snapshot(self) -> tuple[tuple[tuple[CardId, ...], ...], ...]:
        return tuple(tuple(tuple(s.cards) for s in row) for row in self.cells)

    def card_count(self) -> int:
        marks = sum(m is not None for m in self.row_marks) + sum(m is not None for m in self.col_marks)
        return marks + sum(len(s.cards) for row in self.cells for s in row)

    # raw moves ---------------------------------------------------------------
    def permute_rows(self, dest: Sequence[int], src: Sequence[int]) -> None:
        """Row ``src[t]`` moves to position ``dest[t]`` (0-based)."""
        seqs = [self.cells, self._row_home]
        if self.row_marks:
            seqs.append(self.row_marks)
        _permute(seqs, dest, src, self.k)

    def permute_cols(self, dest: Sequence[int], src: Sequence[int]) -> None:
        seqs = [*self.cells, self._col_home]
        if self.col_marks:
            seqs.append(self.col_marks)
        _permute(seqs, dest, src, self.l)


def _permute(seqs: list[list], dest: Sequence[int], src: Sequence[int], size: int) -> None:
    if len(dest) == size and list(dest) == list(range(size)):
        for seq in seqs:
            seq[:] = [seq[s] for s in src]
        return
    moves = list(zip(dest, src))
    for seq in seqs:
        old = seq[:]
        for d, s in moves:
            seq[d] = old[s]


@dataclass
class ShuffleCounter:
    count: int = 0

    def bump(self) -> None:
        self.count += 1


@dataclass
class HelperRegion:
    """One helper set stacked over one region of a matrix.

    ``stacking`` is the prover's secret map from position to helper card;
    ``name`` and ``number`` are the public label and the target number.
    """

    name: str
    helper_set: str
    number: int
    stacking: dict[Pos, CardId]

    @property
    def cells(self) -> list[Pos]:
        return list(self.stacking)

    @property
    def pointer(self) -> CardId:
        return CardId(self.helper_set, 1)


@dataclass
class CutResult:
    """Revealed helpers by position, the cells each helper set now covers
    (row-major), and each region's located stack."""

    helpers: dict[Pos, CardId]
    regions: dict[str, list[Pos]] = field(default_factory=dict)
    located: dict[str, tuple[Pos, CardId]] = field(default_factory=dict)


def secret_stacking(cells: Sequence[Pos], helpers: Sequence[CardId], target: Pos, rng: random.Random) -> dict[Pos, CardId]:
    """Put ``helpers[0]`` on ``target`` and the rest on the other cells at random."""
    if len(cells) != len(helpers):
        raise ValueError(f"helper set size {len(helpers)} does not match region size {len(cells)}")
    if target not in cells:
        raise ValueError(f"target {target} outside the region")
    rest = list(helpers[1:])
    rng.shuffle(rest)
    it = iter(rest)
    return {c: helpers[0] if c == target else next(it) for c in cells}


def _draw(rng: random.Random, indices: Sequence[int]) -> list[int]:
    perm = list(indices)
    rng.shuffle(perm)
    return perm


class Table:
    """Physical table for one protocol run.

    ``rng`` is the shuffle stream: permutations drawn from it are known to
    nobody and are never emitted.
    """

    def __init__(self, rng: random.Random, emit: Emit | None = None) -> None:
        self.rng = rng
        self.counter = ShuffleCounter()
        self.emit: Emit = emit or (lambda kind, data: None)

    def draw(self, m: MarkedMatrix, axis: str, indices: Sequence[int]) -> list[int]:
        """Source index for each of ``indices``: a uniform permutation of them."""
        return _draw(self.rng, indices)

    def row_shuffle(self, m: MarkedMatrix, rows: Iterable[int]) -> None:
        """Uniformly permute the given rows (1-based), marks included."""
        idx = sorted(set(rows))
        if idx and (idx[0] < 1 or idx[-1] > m.k):
            raise IndexError(f"row index out of range 1..{m.k}: {idx}")
        src = self.draw(m, "row", idx)
        m.permute_rows([i - 1 for i in idx], [s - 1 for s in src])
        self.counter.bump()
        self.emit("shuffle", {"axis": "row", "indices": idx})

    def col_shuffle(self, m: MarkedMatrix, cols: Iterable[int]) -> None:
        idx = sorted(set(cols))
        if idx and (idx[0] < 1 or idx[-1] > m.l):
            raise IndexError(f"column index out of range 1..{m.l}: {idx}")
        src = self.draw(m, "col", idx)
        m.permute_cols([j - 1 for j in idx], [s - 1 for s in src])
        self.counter.bump()
        self.emit("shuffle", {"axis": "col", "indices": idx})

    def restore(self, m: MarkedMatrix) -> None:
        """Turn the marking cards over and sort rows and columns by them."""
        if m.marks_face_up:
            raise ProtocolStateError("marking cards are already face-up")
        if None in m.row_marks or None in m.col_marks:
            raise ProtocolStateError("a marking card is missing")
        m.marks_face_up = True
        self.emit(
            "rearrange_restore",
            {"row_marks": [str(c) for c in m.row_marks], "col_marks": [str(c) for c in m.col_marks]},
        )
        if m.row_marks:
            order = [m._row_rank[c] for c in m.row_marks]
            m.permute_rows(order, range(m.k))
        if m.col_marks:
            order = [m._col_rank[c] for c in m.col_marks]
            m.permute_cols(order, range(m.l))
        m.marks_face_up = False

    def rearrangement(self, m: MarkedMatrix) -> None:
        """Full row and column shuffle, then sort by the revealed marks."""
        if m.marks_face_up:
            raise ProtocolStateError("marking cards must be face-down")
        if None in m.row_marks or None in m.col_marks or not (m.row_marks and m.col_marks):
            raise ProtocolStateError("a marking card is missing")
        self.row_shuffle(m, range(1, m.k + 1))
        self.col_shuffle(m, range(1, m.l + 1))
        self.restore(m)

    def reveal(self, step: str, positions: Sequence[Pos], faces: Sequence[CardId]) -> None:
        self.emit("reveal", {"step": step, "positions": list(positions), "faces": [str(f) for f in faces]})

    def chosen_cut(
        self,
        m: MarkedMatrix,
        regions: Sequence[HelperRegion],
        shuffles: Sequence[tuple[str, Sequence[int]]] | None = None,
        restore: bool = True,
    ) -> CutResult:
        """Locate each region's secretly chosen stack without revealing where it was.

        The stack found under a region's index-1 helper is whatever the prover
        stacked that helper on.  ``shuffles`` defaults to one full row and one
        full column shuffle.
        """
        cells = m.cells
        for reg in regions:
            for (i, j), helper in reg.stacking.items():
                cells[i][j].cards.insert(0, helper)
            self.emit(
                "stack_helpers_secret",
                {"region": reg.name, "helpers": reg.helper_set, "number": reg.number, "cells": list(reg.stacking)},
            )
        if shuffles is None:
            shuffles = [("row", range(1, m.k + 1)), ("col", range(1, m.l + 1))]
        for axis, idx in shuffles:
            (self.row_shuffle if axis == "row" else self.col_shuffle)(m, idx)

        by_set: dict[str, list[Pos]] = {reg.helper_set: [] for reg in regions}
        helpers: dict[Pos, CardId] = {}
        for i, row in enumerate(m.cells):
            for j, st in enumerate(row):
                top = st.cards[0]
                cells_of = by_set.get(top.set_label)
                if cells_of is not None and len(st.cards) > 1:
                    helpers[(i, j)] = top
                    cells_of.append((i, j))
        self.reveal("helpers", list(helpers), list(helpers.values()))

        result = CutResult(helpers, by_set)
        where = {card: pos for pos, card in helpers.items()}
        positions, faces = [], []
        for reg in regions:
            pos = where.get(reg.pointer)
            if pos is None:
                raise ProtocolStateError(f"helper {reg.pointer} not on the table")
            card = m.cells[pos[0]][pos[1]].cards[-1]
            result.located[reg.name] = (pos, card)
            positions.append(pos)
            faces.append(card)
        self.reveal("targets", positions, faces)

        cells = m.cells
        for i, j in helpers:
            del cells[i][j].cards[0]
        self.emit("remove_helpers", {})
        if restore:
            self.rearrangement(m)
        return result
