"""The 9x9 example puzzle with its unique solution, plus small fixture helpers."""
from __future__ import annotations

import random

from .grid import Grid, block_cells, enumerate_solutions, parse_grid, pattern_solution

SAMPLE_PUZZLE_TEXT = """\
9
. . 7 . . 1 . 8 .
. . . . . . . . .
5 9 . . 2 . 6 1 3
1 . 5 4 . 6 . 3 .
3 6 . . 1 . . . .
. . . . . . . . .
. . 6 . . 5 4 . .
. 5 . . . 2 3 7 .
. . . 3 7 4 . . 1
"""

SAMPLE_SOLUTION_TEXT = """\
9
6 2 7 5 3 1 9 8 4
8 1 3 6 4 9 2 5 7
5 9 4 8 2 7 6 1 3
1 7 5 4 9 6 8 3 2
3 6 9 2 1 8 7 4 5
2 4 8 7 5 3 1 9 6
7 3 6 1 8 5 4 2 9
4 5 1 9 6 2 3 7 8
9 8 2 3 7 4 5 6 1
"""


def sample_puzzle() -> Grid:
    return parse_grid(SAMPLE_PUZZLE_TEXT)


def sample_solution() -> Grid:
    return parse_grid(SAMPLE_SOLUTION_TEXT)


def honest_fixture(n: int, seed: int = 0) -> tuple[Grid, Grid]:
    """A (puzzle, solution) pair for any size; the built-in sample for n=9."""
    if n == 9:
        return sample_puzzle(), sample_solution()
    solution = relabel(pattern_solution(n), random.Random(seed))
    rng = random.Random(seed + 1)
    rows = [list(row) for row in solution.cells]
    for r in range(n):
        for c in range(n):
            if rng.random() < 0.6:
                rows[r][c] = 0
    return Grid.from_rows(rows), solution


def relabel(grid: Grid, rng: random.Random) -> Grid:
    """Apply a random digit relabelling (keeps validity)."""
    digits = list(range(1, grid.n + 1))
    rng.shuffle(digits)
    return Grid.from_rows([[digits[v - 1] if v else 0 for v in row] for row in grid.cells])


def scramble_block_values(grid: Grid, puzzle: Grid, block: int, rng: random.Random) -> Grid:
    """Permute the non-given values inside one block."""
    cells = [cell for cell in block_cells(grid.n, block) if puzzle[cell] == 0]
    values = [grid[cell] for cell in cells]
    rng.shuffle(values)
    rows = [list(row) for row in grid.cells]
    for (r, c), v in zip(cells, values):
        rows[r][c] = v
    return Grid.from_rows(rows)


def random_puzzle(solution: Grid, rng: random.Random, keep: float = 0.4) -> Grid:
    rows = [[v if rng.random() < keep else 0 for v in row] for row in solution.cells]
    return Grid.from_rows(rows)


def small_corpus(n: int, count: int, seed: int = 0) -> list[tuple[Grid, Grid]]:
    """Valid (puzzle, completion) pairs drawn from the backtracking enumerator."""
    rng = random.Random(seed)
    if n == 4:
        sols = enumerate_solutions(Grid.empty(4), limit=288)
    else:
        sols = enumerate_solutions(Grid.empty(n), limit=count)
    out = []
    for i in range(count):
        sol = relabel(sols[rng.randrange(len(sols))], rng)
        out.append((random_puzzle(sol, rng), sol))
    return out
