"""Cheating provers for the soundness battery.

Each mutation takes an honest (puzzle, solution) pair and a seed and returns
a prover that does not hold a valid solution, together with the check that
should catch it.  Cells are picked at random among non-given ones.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .cards import CardId, block_labels
from .config import ProtocolConfig
from .grid import Grid, block_cells
from .protocol import Misstack, Placement, ProverState, prover_rng, run_protocol
from .verifier import Verdict


@dataclass(frozen=True)
class Mutant:
    kind: str
    prover: ProverState
    note: str


def _free_pairs(puzzle: Grid, same: Callable[[tuple[int, int], tuple[int, int]], bool]) -> list:
    n = puzzle.n
    out = []
    for blk in range(n):
        free = [c for c in block_cells(n, blk) if not puzzle[c]]
        out += [(a, b) for i, a in enumerate(free) for b in free[i + 1 :] if same(a, b)]
    return out


def _swap(puzzle: Grid, solution: Grid, seed: int, kind: str, same) -> Mutant:
    pairs = _free_pairs(puzzle, same)
    if not pairs:
        raise ValueError(f"no free cell pair for a {kind} mutation")
    a, b = random.Random(f"mutation/{kind}/{seed}").choice(pairs)
    bad = solution.swap(a, b)
    prover = ProverState(Placement.from_grid(puzzle, bad), prover_rng(seed))
    return Mutant(kind, prover, f"swapped cells {a} and {b}")


def row_conflict(puzzle: Grid, solution: Grid, seed: int) -> Mutant:
    """Swap two cells of one block column, so two rows repeat a number."""
    return _swap(puzzle, solution, seed, "row-conflict", lambda a, b: a[1] == b[1])


def column_conflict(puzzle: Grid, solution: Grid, seed: int) -> Mutant:
    """Swap two cells of one block row, so two columns repeat a number."""
    return _swap(puzzle, solution, seed, "column-conflict", lambda a, b: a[0] == b[0])


def cross_block(puzzle: Grid, solution: Grid, seed: int) -> Mutant:
    """Exchange the cards for 1 between two blocks; the numbers stay valid."""
    n = puzzle.n
    labels = block_labels(n)
    honest = Placement.from_grid(puzzle, solution)
    where = {card: cell for cell, card in honest.cards.items()}
    options = []
    for s in range(n):
        for t in range(s + 1, n):
            a, b = where[CardId(labels[s], 1)], where[CardId(labels[t], 1)]
            if not puzzle[a] and not puzzle[b]:
                options.append((a, b))
    if not options:
        raise ValueError("every block has its 1 given")
    a, b = random.Random(f"mutation/cross-block/{seed}").choice(options)
    prover = ProverState(honest.swapped(a, b), prover_rng(seed))
    return Mutant("cross-block", prover, f"cards at {a} and {b} exchanged")


def misstack(puzzle: Grid, solution: Grid, seed: int) -> Mutant:
    """Honest cards, but x1 goes on the wrong card in the first check."""
    prover = ProverState.honest(puzzle, solution, seed, Misstack(check=0, number=1))
    return Mutant("misstack", prover, "x1 stacked on the card for 2 in the first round")


MUTATIONS: dict[str, Callable[[Grid, Grid, int], Mutant]] = {
    "row-conflict": row_conflict,
    "column-conflict": column_conflict,
    "cross-block": cross_block,
    "misstack": misstack,
}


def run_mutant(puzzle: Grid, solution: Grid, config: ProtocolConfig, kind: str, *, check_rows: bool = True) -> Verdict:
    mutant = MUTATIONS[kind](puzzle, solution, config.seed)
    verdict, _ = run_protocol(puzzle, mutant.prover, config, check_rows=check_rows)
    return verdict
