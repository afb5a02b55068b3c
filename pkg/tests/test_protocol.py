import pytest

from cardsudoku.cards import CardId
from cardsudoku.config import ProtocolConfig
from cardsudoku.fixtures import honest_fixture
from cardsudoku.grid import Grid
from cardsudoku.plan import GroupCheck, expected_counts, protocol_plan
from cardsudoku.protocol import (
    Misstack,
    Placement,
    ProverState,
    block_verification,
    run_honest,
    run_protocol,
    verify_block_group_rows,
)
from cardsudoku.verifier import Verdict, RunStats, replay

from conftest import CONFIGS


@pytest.mark.parametrize("method,opt", CONFIGS)
def test_fig1_accepted_with_exact_counts(puzzle, solution, method, opt):
    cfg = ProtocolConfig(9, method, opt, seed=7)
    verdict, t = run_honest(puzzle, solution, cfg)
    assert verdict.accepted, verdict.rejection_reason
    assert (verdict.stats.cards, verdict.stats.shuffles) == expected_counts(cfg)
    assert replay(t) == verdict


@pytest.mark.parametrize("n", [4, 16])
@pytest.mark.parametrize("method,opt", CONFIGS)
def test_other_sizes_accept(n, method, opt):
    p, s = honest_fixture(n, 3)
    cfg = ProtocolConfig(n, method, opt, seed=3)
    verdict, _ = run_honest(p, s, cfg)
    assert verdict.accepted, verdict.rejection_reason
    assert verdict.stats.shuffles == expected_counts(cfg)[1]


def test_placement_forces_given_cards(puzzle, solution):
    pl = Placement.from_grid(puzzle, solution)
    assert pl.consistent_with_givens
    for (r, c), v in puzzle.givens().items():
        assert pl.cards[(r, c)].index == v
    assert len(set(pl.cards.values())) == 81
    assert pl.decoded(9) == solution


def test_placement_contradicting_givens_is_rejected(puzzle, solution):
    (r, c), v = next(iter(puzzle.givens().items()))
    bad = solution.with_cell(r, c, v % 9 + 1)
    assert not Placement.from_grid(puzzle, bad).consistent_with_givens
    verdict, _ = run_honest(puzzle, bad, ProtocolConfig(seed=1))
    assert not verdict.accepted and verdict.failed_check == "givens"


def test_inconsistent_givens_rejected():
    rows = [[1, 1, 0, 0]] + [[0] * 4 for _ in range(3)]
    puzzle = Grid.from_rows(rows)
    claim = Grid.from_rows([[1, 1, 3, 4], [3, 4, 1, 2], [2, 3, 4, 1], [4, 2, 2, 3]])
    verdict, _ = run_honest(puzzle, claim, ProtocolConfig(4, "B", True))
    assert not verdict.accepted and verdict.failed_check == "givens"


def test_block_verification_unoptimized_18_shuffles(puzzle, solution):
    prover = ProverState.honest(puzzle, solution)
    ok, reason, shuffles = block_verification(puzzle, prover, ProtocolConfig(9, "A", False))
    assert ok and reason is None and shuffles == 18
    ok, _, shuffles = block_verification(puzzle, prover, ProtocolConfig(9, "A", True))
    assert ok and shuffles == 6


def test_block_verification_catches_swapped_cards(solution):
    # b1 is a given on the sample board, so use the blank board to reach the block phase
    puzzle = Grid.empty(9)
    honest = Placement.from_grid(puzzle, solution)
    where = {card: cell for cell, card in honest.cards.items()}
    a1, b1 = where[CardId("a", 1)], where[CardId("b", 1)]
    prover = ProverState(honest.swapped(a1, b1), ProverState.honest(puzzle, solution).rng)
    ok, reason, _ = block_verification(puzzle, prover, ProtocolConfig(9, "A", False))
    assert not ok and "Block A" in reason and "b1" in reason


def test_swap_onto_given_cell_fails_at_placement(puzzle, solution):
    honest = Placement.from_grid(puzzle, solution)
    where = {card: cell for cell, card in honest.cards.items()}
    prover = ProverState(honest.swapped(where[CardId("a", 1)], where[CardId("b", 1)]), ProverState.honest(puzzle, solution).rng)
    ok, reason, _ = block_verification(puzzle, prover, ProtocolConfig(9, "A", False))
    assert not ok and reason.startswith("givens")


def _band_check(method, blocks):
    return GroupCheck("rows", blocks, ("x", "y", "z")[: len(blocks)], tuple(range(1, 10)), False, True, True)


def test_group_rows_pass_for_sample(puzzle, solution):
    check = _band_check("A", (0, 1, 2))
    for seed in range(20):
        ok, reason, _ = verify_block_group_rows(puzzle, ProverState.honest(puzzle, solution, seed), ProtocolConfig(9, "A", False, seed), check)
        assert ok, reason


def test_group_rows_detect_same_row():
    # keep block A valid but move its 1 into the row holding block B's 1
    from cardsudoku.fixtures import sample_solution

    sol = sample_solution()
    puzzle = Grid.empty(9)
    a1 = next((r, c) for r in range(3) for c in range(3) if sol[(r, c)] == 1)
    b1_row = next(r for r in range(3) for c in range(3, 6) if sol[(r, c)] == 1)
    other = next((b1_row, c) for c in range(3) if (b1_row, c) != a1)
    bad = sol.swap(a1, other) if a1[0] != b1_row else sol
    assert bad != sol
    check = GroupCheck("rows", (0, 1), ("x", "y"), (1,), False, True, True)
    ok, reason, _ = verify_block_group_rows(puzzle, ProverState.honest(puzzle, bad, 0), ProtocolConfig(9, "B", False), check)
    assert not ok and "same row" in reason


def test_group_rows_detect_misstack(puzzle, solution):
    check = _band_check("A", (0, 1, 2))
    prover = ProverState.honest(puzzle, solution, 0, Misstack(0, 1))
    ok, reason, _ = verify_block_group_rows(puzzle, prover, ProtocolConfig(9, "A", False), check)
    assert not ok and "expected a1" in reason


def test_verdict_invariant():
    stats = RunStats(1, 1, 1)
    with pytest.raises(ValueError):
        Verdict(True, "oops", None, stats)
    with pytest.raises(ValueError):
        Verdict(False, None, None, stats)


def test_shape_errors(puzzle, solution):
    with pytest.raises(ValueError):
        run_honest(puzzle, solution, ProtocolConfig(4, "B"))
    pl = Placement.from_grid(puzzle, solution)
    partial = Placement(dict(list(pl.cards.items())[:-1]))
    with pytest.raises(ValueError):
        run_protocol(puzzle, ProverState(partial, ProverState.honest(puzzle, solution).rng), ProtocolConfig())


def test_plan_rounds_match_reveals(puzzle, solution):
    cfg = ProtocolConfig(9, "B", True)
    verdict, t = run_honest(puzzle, solution, cfg)
    assert len(t.of_kind("reveal", step="targets")) == protocol_plan(cfg).rounds()
