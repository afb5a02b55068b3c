"""Public schedule of a run: which blocks are checked together, and when.

Everything here depends on the configuration only, so prover, verifier and
simulator can all derive the same schedule.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

from .cards import block_groups, block_labels, expected_card_count, helper_labels, uniqueness_aux_sets
from .config import ProtocolConfig
from .grid import block_cells


@dataclass(frozen=True)
class UniquenessPass:
    blocks: tuple[int, ...]
    aux_sets: tuple[str, ...]


@dataclass(frozen=True)
class GroupCheck:
    """Row-distinctness check for blocks of one band (or columns of one stack).

    ``orientation`` is ``"rows"`` or ``"cols"``; in the latter case the marked
    matrix is built transposed.  ``merged`` selects one column shuffle over the
    whole matrix instead of one per block.
    """

    orientation: str
    blocks: tuple[int, ...]
    helper_sets: tuple[str, ...]
    numbers: tuple[int, ...]
    merged: bool
    rearrange_each_round: bool
    rearrange_at_end: bool

    def shuffles(self, b: int) -> int:
        per_round = 2 if self.merged else 1 + len(self.blocks)
        total = per_round * len(self.numbers)
        if self.rearrange_each_round:
            total += 2 * len(self.numbers)
        elif self.rearrange_at_end:
            total += 2
        return total


@dataclass(frozen=True)
class Plan:
    config: ProtocolConfig
    passes: tuple[UniquenessPass, ...]
    checks: tuple[GroupCheck, ...]

    def shuffle_count(self) -> int:
        b = self.config.block_size
        return 2 * len(self.passes) + sum(c.shuffles(b) for c in self.checks)

    def rounds(self) -> int:
        return sum(len(c.numbers) for c in self.checks)


def block_index(b: int, band: int, stack: int) -> int:
    return band * b + stack


def _method_b_pairs(b: int) -> list[tuple[str, tuple[int, int]]]:
    pairs = []
    for band in range(b):
        for s, t in combinations(range(b), 2):
            pairs.append(("rows", (block_index(b, band, s), block_index(b, band, t))))
    for stack in range(b):
        for s, t in combinations(range(b), 2):
            pairs.append(("cols", (block_index(b, s, stack), block_index(b, t, stack))))
    return pairs


def final_matching(b: int) -> list[tuple[str, tuple[int, int]]]:
    """Pairs verified last, covering 2*floor(n/2) distinct blocks.

    Vertically adjacent bands are paired stack by stack; with an odd number of
    bands the bottom band pairs up its blocks side by side.  For n=9 this is
    (A,D), (B,E), (C,F), (G,H).
    """
    out = []
    for t in range(b // 2):
        for stack in range(b):
            out.append(("cols", (block_index(b, 2 * t, stack), block_index(b, 2 * t + 1, stack))))
    if b % 2:
        last = b - 1
        for u in range(b // 2):
            out.append(("rows", (block_index(b, last, 2 * u), block_index(b, last, 2 * u + 1))))
    return out


def protocol_plan(config: ProtocolConfig) -> Plan:
    n, b, method, opt = config.n, config.block_size, config.method, config.optimized
    g = config.blocks_per_pass
    aux = tuple(uniqueness_aux_sets(n, method, opt, g))
    passes = tuple(UniquenessPass(grp, aux if len(grp) > 1 else aux[:1]) for grp in block_groups(n, g))

    numbers = tuple(range(1, n)) if opt else tuple(range(1, n + 1))
    helpers = helper_labels(n, method)
    checks: list[GroupCheck] = []
    if method == "A":
        hs = tuple(helpers[:b])
        for band in range(b):
            blocks = tuple(block_index(b, band, s) for s in range(b))
            checks.append(GroupCheck("rows", blocks, hs, numbers, opt, not opt, True))
        for stack in range(b):
            blocks = tuple(block_index(b, s, stack) for s in range(b))
            checks.append(GroupCheck("cols", blocks, hs, numbers, opt, not opt, not opt))
    else:
        hs = tuple(helpers[:2])
        pairs = _method_b_pairs(b)
        skip: list[tuple[str, tuple[int, int]]] = []
        if opt:
            skip = final_matching(b)
            pairs = [p for p in pairs if p not in skip]
        for orient, blocks in pairs:
            checks.append(GroupCheck(orient, blocks, hs, numbers, opt, not opt, True))
        for orient, blocks in skip:
            checks.append(GroupCheck(orient, blocks, hs, numbers, opt, False, False))
    return Plan(config, passes, tuple(checks))


def check_cells(n: int, check: GroupCheck) -> list[list[tuple[int, int]]]:
    """Board cells forming the check's marked matrix, row by row.

    Matrix columns run block by block; for ``"cols"`` checks the matrix is
    the transpose, so matrix rows are board columns.
    """
    b = int(round(n ** 0.5))
    cols_per_block = [block_cells(n, blk) for blk in check.blocks]
    rows = []
    for i in range(b):
        row = []
        for cells in cols_per_block:
            r0, c0 = cells[0]
            for jj in range(b):
                row.append((r0 + i, c0 + jj) if check.orientation == "rows" else (r0 + jj, c0 + i))
        rows.append(row)
    return rows


def expected_counts(config: ProtocolConfig) -> tuple[int, int]:
    """Closed-form (cards, shuffles) for a complete honest run."""
    n, b = config.n, config.block_size
    cards = expected_card_count(n, config.method)
    g = config.blocks_per_pass
    block_phase = 2 * -(-n // g)
    if config.method == "A":
        if not config.optimized:
            return cards, 2 * n + (b + 3) * n * b * 2
        # rounds 1..n-1 at 2 shuffles, one rearrangement per band, none per stack
        return cards, block_phase + 2 * n * b * 2 - 2 * b
    pairs = comb(b, 2) * b * 2
    if not config.optimized:
        return cards, 2 * n + 5 * n * pairs
    return cards, block_phase + 2 * n * pairs - 2 * (n // 2)


def tabulated_shuffles(n: int, method: str, optimized: bool) -> int:
    """Shuffle counts exactly as tabulated, for cross-checking ``expected_counts``."""
    b = int(round(n ** 0.5))
    if method == "A":
        return 4 * n * b if optimized else 2 * n * n + 6 * n * b + 2 * n
    if not optimized:
        return 5 * n * n * (b - 1) + 2 * n
    if n == 9:
        return 322
    return 2 * n * n * (b - 1) + (0 if n % 2 == 0 else 2)


def region_labels(n: int) -> list[str]:
    return [lab.upper() for lab in block_labels(n)]
