import pytest

from cardsudoku.config import ProtocolConfig
from cardsudoku.fixtures import sample_puzzle, sample_solution
from cardsudoku.grid import check_solution
from cardsudoku.mutations import MUTATIONS, run_mutant

from conftest import CONFIGS

# blocks sharing one grouped uniqueness pass hide a swap from it; the face check catches it
EXPECTED = {"row-conflict": {"row"}, "column-conflict": {"column"}, "cross-block": {"block", "face"}, "misstack": {"face"}}


@pytest.mark.parametrize("kind", sorted(MUTATIONS))
def test_mutant_is_not_a_solution(puzzle, solution, kind):
    if kind in ("misstack", "cross-block"):
        pytest.skip("grid stays valid; the cheat is in the cards")
    for seed in range(5):
        m = MUTATIONS[kind](puzzle, solution, seed)
        assert not check_solution(puzzle, m.prover.placement.decoded(9))
        assert m.prover.placement.consistent_with_givens


@pytest.mark.parametrize("method,opt", CONFIGS)
@pytest.mark.parametrize("kind", sorted(MUTATIONS))
def test_mutants_rejected(puzzle, solution, method, opt, kind):
    for seed in range(10):
        v = run_mutant(puzzle, solution, ProtocolConfig(9, method, opt, seed), kind)
        assert not v.accepted
        assert v.failed_check in EXPECTED[kind], v.rejection_reason


def test_rejection_deterministic(puzzle, solution):
    cfg = ProtocolConfig(9, "B", True, 42)
    for kind in MUTATIONS:
        assert run_mutant(puzzle, solution, cfg, kind) == run_mutant(puzzle, solution, cfg, kind)


def test_broken_verifier_lets_row_conflict_through(puzzle, solution):
    v = run_mutant(puzzle, solution, ProtocolConfig(9, "B", True, 1), "row-conflict", check_rows=False)
    assert v.accepted
