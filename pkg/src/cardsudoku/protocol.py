"""Protocol drivers: block verification, row/column group checks, full runs.

The driver plays the prover and the table.  It never decides acceptance
itself: every public action is fed to a :class:`~cardsudoku.verifier.Verifier`,
which raises :class:`~cardsudoku.verifier.Rejected` when a check fails.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

from .cards import CardError, CardId, block_labels, build_card_system, validate_distinguishability
from .config import ProtocolConfig
from .grid import Grid, block_cells
from .plan import GroupCheck, Plan, check_cells, protocol_plan
from .table import HelperRegion, MarkedMatrix, Pos, Stack, Table, secret_stacking
from .transcript import Transcript
from .verifier import Rejected, Verdict, Verifier


@dataclass(frozen=True)
class Placement:
    """Which encoding card the prover puts on every cell."""

    cards: dict[Pos, CardId]
    consistent_with_givens: bool = True

    @classmethod
    def from_grid(cls, puzzle: Grid, completion: Grid) -> "Placement":
        """Encode a claimed completion with each block's own card set.

        A given cell gets the card for the claimed value, which is the
        publicly forced card unless the claim contradicts the givens (the
        verifier then rejects at placement).  A value repeated inside a block
        cannot be encoded twice, so repeats take the block's unused cards in
        ascending order.
        """
        n = puzzle.n
        labels = block_labels(n)
        cards: dict[Pos, CardId] = {}
        for blk in range(n):
            lab = labels[blk]
            cells = block_cells(n, blk)
            used: set[CardId] = set()
            deferred = []
            # given cells claim their card first, then the rest in order
            for cell in sorted(cells, key=lambda c: not puzzle[c]):
                value = completion[cell] if 1 <= completion[cell] <= n else puzzle[cell]
                card = CardId(lab, value)
                if value and card not in used:
                    cards[cell] = card
                    used.add(card)
                else:
                    deferred.append(cell)
            spare = [CardId(lab, j) for j in range(1, n + 1) if CardId(lab, j) not in used]
            for cell, card in zip(deferred, spare):
                cards[cell] = card
        consistent = all(cards[c].index == v for c, v in puzzle.givens().items())
        return cls(cards, consistent)

    def decoded(self, n: int) -> Grid:
        """The number grid the placed cards actually encode."""
        rows = [[0] * n for _ in range(n)]
        for (r, c), card in self.cards.items():
            rows[r][c] = card.index
        return Grid.from_rows(rows)

    def swapped(self, a: Pos, b: Pos) -> "Placement":
        cards = dict(self.cards)
        cards[a], cards[b] = cards[b], cards[a]
        return Placement(cards, self.consistent_with_givens)


@dataclass(frozen=True)
class Misstack:
    """Put the index-1 helper on the card for ``number + 1`` instead of ``number``.

    Applies in round ``number`` of the ``check``-th group check (0-based).
    """

    check: int = 0
    number: int = 1


@dataclass
class ProverState:
    """Everything the prover knows and the verifier must not see."""

    placement: Placement
    rng: random.Random
    misbehavior: Misstack | None = None
    layout: dict[Pos, CardId] = field(default_factory=dict)
    where: dict[CardId, Pos] = field(default_factory=dict)
    stackings: list[dict[Pos, CardId]] = field(default_factory=list)

    @classmethod
    def honest(cls, puzzle: Grid, solution: Grid, seed: int = 0, misbehavior: Misstack | None = None) -> "ProverState":
        return cls(Placement.from_grid(puzzle, solution), prover_rng(seed), misbehavior)

    def start_matrix(self, cells: Sequence[Sequence[Pos]]) -> None:
        placed = self.placement.cards
        self.layout = {(i, j): placed[cell] for i, row in enumerate(cells) for j, cell in enumerate(row)}
        self.where = {card: pos for pos, card in self.layout.items()}

    def choose_target(self, cells: Sequence[Pos], label: str, number: int, check_index: int) -> Pos:
        want = number
        mis = self.misbehavior
        if mis is not None and mis.check == check_index and mis.number == number:
            want = number + 1 if number < len(cells) else number - 1
        pos = self.where.get(CardId(label, want))
        if pos is not None and pos in cells:
            return pos
        # the wanted card is not in this region: point at any card showing the number
        for pos in cells:
            if self.layout[pos].index == want:
                return pos
        return cells[0]

    def stack(self, cells: Sequence[Pos], helper_set: str, label: str, number: int, check_index: int) -> dict[Pos, CardId]:
        target = self.choose_target(cells, label, number, check_index)
        stacking = secret_stacking(cells, _helper_cards(helper_set, len(cells)), target, self.rng)
        self.stackings.append(stacking)
        return stacking

    def learn_from_reveal(self, regions: Sequence[HelperRegion], revealed: dict[Pos, CardId]) -> None:
        """Track where each encoding card went, via the helper stacked on it."""
        where = {card: pos for pos, card in revealed.items()}
        old = self.layout
        new = dict(old)
        for reg in regions:
            for before, helper in reg.stacking.items():
                new[where[helper]] = old[before]
        self.layout = new
        self.where = {card: pos for pos, card in new.items()}


@lru_cache(maxsize=64)
def _checked_system(n: int, method: str, optimized: bool, group_size: int | None):
    system = build_card_system(n, method, optimized, group_size)
    problems = validate_distinguishability(system)
    if problems:
        raise CardError(f"card system unusable: {problems[0]}")
    return system


@lru_cache(maxsize=None)
def _helper_cards(helper_set: str, size: int) -> tuple[CardId, ...]:
    return tuple(CardId(helper_set, i) for i in range(1, size + 1))


def table_rng(seed: int) -> random.Random:
    return random.Random(f"table/{seed}")


def prover_rng(seed: int) -> random.Random:
    return random.Random(f"prover/{seed}")


@dataclass
class UniquenessResult:
    passed: bool
    revealed: list[CardId]


def uniqueness_verify(
    table: Table,
    sigma: Sequence[Stack],
    aux: Sequence[CardId],
    expected: set[CardId] | None = None,
    context: dict | None = None,
) -> UniquenessResult:
    """Show that the face-down sequence ``sigma`` is a permutation of ``expected``.

    Two column shuffles; the sequence ends up back in its original order.
    """
    if len(aux) != len(sigma):
        raise ValueError(f"need {len(sigma)} auxiliary cards, got {len(aux)}")
    m = MarkedMatrix([list(sigma)], col_marks=aux)
    table.emit(
        "form_matrix",
        {"purpose": "uniqueness", "dims": [1, len(sigma)], "row_marks": [], "col_marks": [str(c) for c in aux], **(context or {})},
    )
    every = range(1, m.l + 1)
    table.col_shuffle(m, every)
    faces = [m[(0, j)].turn(-1) for j in range(m.l)]
    table.reveal("uniqueness", [(0, j) for j in range(m.l)], faces)
    table.col_shuffle(m, every)
    table.restore(m)
    assert m.in_home_order()
    passed = expected is None or Counter(faces) == Counter(expected)
    return UniquenessResult(passed, faces)


def _recorder(transcript: Transcript, verifier: Verifier) -> Callable[[str, dict], None]:
    # a closure rather than a bound method, so finished runs are freed without the cycle collector
    def record(kind: str, data: dict) -> None:
        verifier.observe(transcript.append(kind, data))

    return record


class ProtocolRun:
    """One run: board, table, prover and verifier wired to a single transcript."""

    def __init__(
        self,
        puzzle: Grid,
        prover: ProverState,
        config: ProtocolConfig,
        *,
        check_rows: bool = True,
        table_factory: Callable[..., Table] = Table,
    ) -> None:
        self.puzzle = puzzle
        self.prover = prover
        self.config = config
        self.plan: Plan = protocol_plan(config)
        self.labels = block_labels(config.n)
        self.transcript = Transcript(puzzle, config)
        self.verifier = Verifier(puzzle, config, check_rows=check_rows)
        self.record = _recorder(self.transcript, self.verifier)
        self.table = table_factory(table_rng(config.seed), self.record)
        self.board: dict[Pos, Stack] = {}
        self.system = _checked_system(config.n, config.method, config.optimized, config.group_size)

    def place_cards(self) -> None:
        n = self.config.n
        for r in range(n):
            for c in range(n):
                card = self.prover.placement.cards[(r, c)]
                self.board[(r, c)] = Stack([card])
                if self.puzzle[(r, c)]:
                    self.record("place_public", {"cell": [r, c], "card": str(card)})
                else:
                    self.record("place_secret", {"cell": [r, c]})

    def block_verification(self) -> None:
        n = self.config.n
        for p in self.plan.passes:
            cells = [cell for blk in p.blocks for cell in block_cells(n, blk)]
            aux = [card for lab in p.aux_sets for card in self.system.members(lab)][: len(cells)]
            expected = {CardId(self.labels[blk], j) for blk in p.blocks for j in range(1, n + 1)}
            uniqueness_verify(
                self.table,
                [self.board[c] for c in cells],
                aux,
                expected,
                {"blocks": [self.labels[b].upper() for b in p.blocks], "cells": [list(c) for c in cells]},
            )

    def group_check(self, index: int, check: GroupCheck) -> None:
        n, b = self.config.n, self.config.block_size
        cells = check_cells(n, check)
        row_marks = [CardId("p", i) for i in range(1, b + 1)]
        col_marks = [CardId("q", j) for j in range(1, len(cells[0]) + 1)]
        m = MarkedMatrix.from_board(self.board, cells, row_marks, col_marks)
        blocks = [self.labels[blk] for blk in check.blocks]
        self.record(
            "form_matrix",
            {
                "purpose": check.orientation,
                "blocks": [lab.upper() for lab in blocks],
                "dims": [m.k, m.l],
                "cells": [[list(c) for c in row] for row in cells],
                "row_marks": [str(c) for c in row_marks],
                "col_marks": [str(c) for c in col_marks],
            },
        )
        home_regions = [[(i, t * b + jj) for i in range(b) for jj in range(b)] for t in range(len(blocks))]
        regions_at = [list(r) for r in home_regions]
        self.prover.start_matrix(cells)
        for j in check.numbers:
            regions = [
                HelperRegion(
                    lab.upper(), hs, j, self.prover.stack(regions_at[t], hs, lab, j, index)
                )
                for t, (lab, hs) in enumerate(zip(blocks, check.helper_sets))
            ]
            shuffles: list[tuple[str, Sequence[int]]] = [("row", range(1, m.k + 1))]
            if check.merged:
                shuffles.append(("col", range(1, m.l + 1)))
            else:
                shuffles += [("col", range(t * b + 1, (t + 1) * b + 1)) for t in range(len(blocks))]
            result = self.table.chosen_cut(m, regions, shuffles, restore=check.rearrange_each_round)
            if check.rearrange_each_round:
                self.prover.start_matrix(cells)
            else:
                self.prover.learn_from_reveal(regions, result.helpers)
                regions_at = [result.regions[hs] for hs in check.helper_sets]
        if check.rearrange_at_end and not check.rearrange_each_round:
            self.table.rearrangement(m)
        if check.rearrange_at_end or check.rearrange_each_round:
            assert m.in_home_order()

    def execute(self) -> tuple[Verdict, Transcript]:
        try:
            self.place_cards()
            self.block_verification()
            for i, check in enumerate(self.plan.checks):
                self.group_check(i, check)
            self.verifier.finish()
        except Rejected as rej:
            verdict = Verdict(False, str(rej), rej.check, self.verifier.stats())
        else:
            verdict = Verdict(True, None, None, self.verifier.stats())
        assert self.table.counter.count == verdict.stats.shuffles
        self.transcript.append(
            "verdict",
            {"accepted": verdict.accepted, "reason": verdict.rejection_reason, "check": verdict.failed_check},
        )
        return verdict, self.transcript


def run_protocol(
    puzzle: Grid,
    prover: ProverState,
    config: ProtocolConfig,
    *,
    check_rows: bool = True,
    table_factory: Callable[..., Table] = Table,
) -> tuple[Verdict, Transcript]:
    """Run the whole protocol once and return the verdict with its transcript."""
    if puzzle.n != config.n:
        raise ValueError(f"puzzle is {puzzle.n}x{puzzle.n} but config says n={config.n}")
    if set(prover.placement.cards) != {(r, c) for r in range(config.n) for c in range(config.n)}:
        raise ValueError("placement must cover every cell exactly once")
    run = ProtocolRun(puzzle, prover, config, check_rows=check_rows, table_factory=table_factory)
    return run.execute()


def run_honest(puzzle: Grid, solution: Grid, config: ProtocolConfig, **kwargs) -> tuple[Verdict, Transcript]:
    return run_protocol(puzzle, ProverState.honest(puzzle, solution, config.seed), config, **kwargs)


def block_verification(puzzle: Grid, prover: ProverState, config: ProtocolConfig) -> tuple[bool, str | None, int]:
    """Run only the placement and block phase; return (passed, reason, shuffles)."""
    run = ProtocolRun(puzzle, prover, config)
    try:
        run.place_cards()
        run.block_verification()
    except Rejected as rej:
        return False, str(rej), run.table.counter.count
    return True, None, run.table.counter.count


def verify_block_group_rows(
    puzzle: Grid, prover: ProverState, config: ProtocolConfig, check: GroupCheck
) -> tuple[bool, str | None, int]:
    """Run a single group check on a freshly placed board.

    Returns (passed, reason, shuffles spent by the check).
    """
    run = ProtocolRun(puzzle, prover, config)
    run.place_cards()
    index = run.plan.checks.index(check) if check in run.plan.checks else 0
    try:
        run.group_check(index, check)
    except Rejected as rej:
        return False, str(rej), run.table.counter.count
    return True, None, run.table.counter.count
