import pytest

from cardsudoku.fixtures import SAMPLE_PUZZLE_TEXT, small_corpus
from cardsudoku.grid import Grid, GridError, check_solution, enumerate_solutions, parse_grid, pattern_solution


def test_fig1_has_28_givens(puzzle):
    assert len(parse_grid(SAMPLE_PUZZLE_TEXT).givens()) == 28
    assert parse_grid(SAMPLE_PUZZLE_TEXT) == puzzle


def test_empty_4x4():
    g = parse_grid("4\n. . . .\n. . . .\n. . . .\n. . . .\n")
    assert g == Grid.empty(4)


@pytest.mark.parametrize(
    "text",
    [
        "9\n" + "\n".join([". " * 8 + "10"] + [". " * 8 + "."] * 8),
        "5\n" + "\n".join([". . . . ."] * 5),
        "4\n. . . .\n. . . .\n",
        "x\n",
        "4\n. . .\n. . . .\n. . . .\n. . . .\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(GridError):
        parse_grid(text)


def test_check_solution(puzzle, solution):
    assert check_solution(puzzle, solution)
    assert not check_solution(puzzle, solution.swap((0, 0), (0, 1)))
    assert check_solution(Grid.empty(4), pattern_solution(4))


def test_check_solution_size_mismatch(puzzle):
    with pytest.raises(GridError):
        check_solution(puzzle, pattern_solution(4))


def test_enumerate_fig1_unique(puzzle, solution):
    assert enumerate_solutions(puzzle, limit=2) == [solution]


def test_enumerate_inconsistent_givens():
    rows = [[1, 1, 0, 0]] + [[0] * 4 for _ in range(3)]
    assert enumerate_solutions(Grid.from_rows(rows), limit=1) == []


def test_enumerate_empty_4x4():
    sols = enumerate_solutions(Grid.empty(4), limit=5)
    assert len(set(sols)) == 5
    assert all(check_solution(Grid.empty(4), s) for s in sols)
    assert len(enumerate_solutions(Grid.empty(4), limit=1000)) == 288


@pytest.mark.parametrize("n", [4, 9, 16])
def test_pattern_solution_valid(n):
    assert check_solution(Grid.empty(n), pattern_solution(n))


def test_corpus_valid():
    for p, s in small_corpus(4, 10, seed=1) + small_corpus(9, 5, seed=1):
        assert check_solution(p, s)


def test_round_trip_text(solution):
    assert parse_grid(solution.to_text()) == solution
