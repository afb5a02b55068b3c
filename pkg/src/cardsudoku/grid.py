"""Sudoku grids, the text format, and a brute-force validity oracle.

The oracle here knows nothing about cards; it is what the protocol verdicts
get cross-checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

EMPTY = 0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int
    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        b = math.isqrt(self.n)
        if self.n < 1 or b * b != self.n:
            raise GridError(f"grid size {self.n} is not a perfect square")
        if len(self.cells) != self.n or any(len(row) != self.n for row in self.cells):
            raise GridError(f"grid must be {self.n}x{self.n}")
        for row in self.cells:
            for v in row:
                if not 0 <= v <= self.n:
                    raise GridError(f"value {v} out of range 1..{self.n}")

    @classmethod
    def from_rows(cls, rows) -> "Grid":
        rows = [tuple(int(v) for v in row) for row in rows]
        return cls(len(rows), tuple(rows))

    @classmethod
    def empty(cls, n: int) -> "Grid":
        return cls(n, tuple((EMPTY,) * n for _ in range(n)))

    @property
    def block_size(self) -> int:
        return math.isqrt(self.n)

    def __getitem__(self, cell: tuple[int, int]) -> int:
        r, c = cell
        return self.cells[r][c]

    def with_cell(self, r: int, c: int, value: int) -> "Grid":
        rows = [list(row) for row in self.cells]
        rows[r][c] = value
        return Grid.from_rows(rows)

    def swap(self, a: tuple[int, int], b: tuple[int, int]) -> "Grid":
        rows = [list(row) for row in self.cells]
        (ra, ca), (rb, cb) = a, b
        rows[ra][ca], rows[rb][cb] = rows[rb][cb], rows[ra][ca]
        return Grid.from_rows(rows)

    def givens(self) -> dict[tuple[int, int], int]:
        return {(r, c): v for r, row in enumerate(self.cells) for c, v in enumerate(row) if v != EMPTY}

    def is_complete(self) -> bool:
        return all(v != EMPTY for row in self.cells for v in row)

    def block_of(self, r: int, c: int) -> int:
        b = self.block_size
        return (r // b) * b + c // b

    def block_cells(self, block: int) -> list[tuple[int, int]]:
        return block_cells(self.n, block)

    def to_text(self) -> str:
        lines = [str(self.n)]
        lines += [" ".join(str(v) if v else "." for v in row) for row in self.cells]
        return "\n".join(lines) + "\n"


def block_cells(n: int, block: int) -> list[tuple[int, int]]:
    """Cells of a block in row-major order."""
    b = math.isqrt(n)
    r0, c0 = (block // b) * b, (block % b) * b
    return [(r0 + i, c0 + j) for i in range(b) for j in range(b)]


def parse_grid(text: str) -> Grid:
    """Parse ``n`` on the first line followed by ``n`` rows of tokens.

    Tokens are decimal values; ``.`` and ``0`` mark an empty cell.  Blank
    lines and ``#`` comments are ignored.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GridError("empty puzzle text")
    try:
        n = int(lines[0])
    except ValueError:
        raise GridError(f"first line must be the grid size, got {lines[0]!r}") from None
    b = math.isqrt(n) if n > 0 else 0
    if b * b != n or n < 1:
        raise GridError(f"grid size {n} is not a perfect square")
    rows = lines[1:]
    if len(rows) != n:
        raise GridError(f"expected {n} rows, got {len(rows)}")
    cells = []
    for i, line in enumerate(rows, start=2):
        tokens = line.split()
        if len(tokens) != n:
            raise GridError(f"line {i}: expected {n} tokens, got {len(tokens)}")
        row = []
        for tok in tokens:
            if tok == ".":
                row.append(EMPTY)
                continue
            try:
                v = int(tok)
            except ValueError:
                raise GridError(f"line {i}: bad token {tok!r}") from None
            if not 0 <= v <= n:
                raise GridError(f"line {i}: value {v} out of range 1..{n}")
            row.append(v)
        cells.append(tuple(row))
    return Grid(n, tuple(cells))


def read_grid(path: str | Path) -> Grid:
    return parse_grid(Path(path).read_text())


def units(n: int) -> Iterator[list[tuple[int, int]]]:
    """Every row, column and block as a list of cells."""
    for r in range(n):
        yield [(r, c) for c in range(n)]
    for c in range(n):
        yield [(r, c) for r in range(n)]
    for blk in range(n):
        yield block_cells(n, blk)


def check_solution(puzzle: Grid, claimed: Grid) -> bool:
    """True iff ``claimed`` fills ``puzzle`` and satisfies every Sudoku unit."""
    if puzzle.n != claimed.n:
        raise GridError(f"size mismatch: puzzle {puzzle.n}, claimed {claimed.n}")
    if not claimed.is_complete():
        return False
    for cell, v in puzzle.givens().items():
        if claimed[cell] != v:
            return False
    full = set(range(1, puzzle.n + 1))
    return all({claimed[cell] for cell in unit} == full for unit in units(puzzle.n))


def enumerate_solutions(puzzle: Grid, limit: int = 1) -> list[Grid]:
    """Up to ``limit`` completions of ``puzzle`` by plain backtracking."""
    n, b = puzzle.n, puzzle.block_size
    full = (1 << (n + 1)) - 2
    rows = [0] * n
    cols = [0] * n
    blks = [0] * n
    grid = [list(row) for row in puzzle.cells]
    for (r, c), v in puzzle.givens().items():
        bit = 1 << v
        k = (r // b) * b + c // b
        if rows[r] & bit or cols[c] & bit or blks[k] & bit:
            return []
        rows[r] |= bit
        cols[c] |= bit
        blks[k] |= bit
    empties = [(r, c) for r in range(n) for c in range(n) if grid[r][c] == EMPTY]
    found: list[Grid] = []

    def solve() -> bool:
        if not empties:
            found.append(Grid.from_rows(grid))
            return len(found) >= limit
        # most constrained cell first
        best_i, best_mask, best_cnt = -1, 0, n + 1
        for i, (r, c) in enumerate(empties):
            mask = full & ~(rows[r] | cols[c] | blks[(r // b) * b + c // b])
            cnt = bin(mask).count("1")
            if cnt < best_cnt:
                best_i, best_mask, best_cnt = i, mask, cnt
                if cnt <= 1:
                    break
        if best_cnt == 0:
            return False
        r, c = empties.pop(best_i)
        k = (r // b) * b + c // b
        for v in range(1, n + 1):
            bit = 1 << v
            if not best_mask & bit:
                continue
            grid[r][c] = v
            rows[r] |= bit
            cols[c] |= bit
            blks[k] |= bit
            if solve():
                return True
            rows[r] &= ~bit
            cols[c] &= ~bit
            blks[k] &= ~bit
        grid[r][c] = EMPTY
        empties.insert(best_i, (r, c))
        return False

    if limit > 0:
        solve()
    return found


def pattern_solution(n: int) -> Grid:
    """A canonical valid filled grid of any perfect-square size."""
    b = math.isqrt(n)
    return Grid.from_rows([[(b * (r % b) + r // b + c) % n + 1 for c in range(n)] for r in range(n)])
