"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also printed through the terminal reporter at the end of the session.
"""
import random
import subprocess
import sys
import time
from collections import Counter

import pytest
from scipy.stats import chisquare

from cardsudoku.cards import CardId, build_card_system, expected_card_count
from cardsudoku.config import ProtocolConfig
from cardsudoku.fixtures import sample_puzzle, sample_solution, honest_fixture
from cardsudoku.grid import check_solution
from cardsudoku.mutations import MUTATIONS, run_mutant
from cardsudoku.plan import expected_counts, tabulated_shuffles
from cardsudoku.protocol import run_honest, uniqueness_verify
from cardsudoku.table import HelperRegion, MarkedMatrix, Stack, Table, secret_stacking
from cardsudoku.zk import (
    compare_views,
    default_statistics,
    real_transcripts,
    simulated_transcripts,
    statistic,
)

from conftest import CONFIGS
from test_oracle import corpus

ALPHA = 0.001
LINES: list[str] = []


def report(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    assert ok, line




@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_sep("-", "acceptance")
        for line in LINES:
            reporter.write_line(line)


def test_criterion_1_card_counts():
    t0 = time.perf_counter()
    got = {m: len(build_card_system(9, m)) for m in "AB"}
    forms = {
        (n, m): expected_card_count(n, m) == len(build_card_system(n, m))
        for n in (4, 9, 16)
        for m in "AB"
    }
    table = {(4, "A"): 30, (4, "B"): 30, (9, "A"): 120, (9, "B"): 108, (16, "A"): 340, (16, "B"): 300}
    closed = all(expected_card_count(n, m) == v for (n, m), v in table.items())
    dt = time.perf_counter() - t0
    ok = got == {"A": 120, "B": 108} and all(forms.values()) and closed and dt < 1
    report(1, ok, f"A={got['A']} B={got['B']} closed forms n=4,9,16 ok={closed and all(forms.values())} {dt:.3f}s")


def test_criterion_2_shuffle_counts():
    puzzle, sol = sample_puzzle(), sample_solution()
    want = {("A", False): 342, ("A", True): 108, ("B", False): 828, ("B", True): 322}
    got = {}
    for (m, opt), v in want.items():
        verdict, _ = run_honest(puzzle, sol, ProtocolConfig(9, m, opt, seed=1))
        got[(m, opt)] = verdict.stats.shuffles
    general = {(4, "B"): 32, (16, "B"): 1536, (16, "A"): 256}
    timings = {}
    for (n, m), v in general.items():
        p, s = honest_fixture(n, 1)
        cfg = ProtocolConfig(n, m, True, seed=1)
        t0 = time.perf_counter()
        verdict, _ = run_honest(p, s, cfg)
        timings[(n, m)] = time.perf_counter() - t0
        got[(n, m)] = verdict.stats.shuffles
        assert verdict.accepted
        assert expected_counts(cfg)[1] == v == tabulated_shuffles(n, m, True)
    for (m, opt), v in want.items():
        assert expected_counts(ProtocolConfig(9, m, opt))[1] == v == tabulated_shuffles(9, m, opt)
    ok = all(got[k] == v for k, v in {**want, **general}.items()) and max(timings.values()) < 10
    shown = " ".join(f"{k[0]}{'/opt' if k[1] is True else '/unopt' if k[1] is False else k[1]}={v}" for k, v in got.items())
    report(2, ok, f"{shown} slowest n=16 run {max(timings.values()):.2f}s")


def test_criterion_3_completeness():
    puzzle, sol = sample_puzzle(), sample_solution()
    accepted = total = 0
    for method, opt in CONFIGS:
        for seed in range(200):
            verdict, _ = run_honest(puzzle, sol, ProtocolConfig(9, method, opt, seed=seed))
            accepted += verdict.accepted
            total += 1
    report(3, accepted == total == 800, f"{accepted}/{total} honest runs accepted")


def test_criterion_4_soundness():
    puzzle, sol = sample_puzzle(), sample_solution()
    accepts = total = 0
    unnamed = 0
    first: dict = {}
    for method, opt in CONFIGS:
        for kind in MUTATIONS:
            for seed in range(100):
                cfg = ProtocolConfig(9, method, opt, seed=seed)
                v = run_mutant(puzzle, sol, cfg, kind)
                total += 1
                accepts += v.accepted
                unnamed += not v.failed_check
                if seed < 10:
                    first[(method, opt, kind, seed)] = (v.failed_check, v.rejection_reason)
    stable = all(
        (lambda v: (v.failed_check, v.rejection_reason))(run_mutant(puzzle, sol, ProtocolConfig(9, m, o, seed=s), k)) == r
        for (m, o, k, s), r in first.items()
    )
    ok = accepts == 0 and unnamed == 0 and stable and total == 1600
    report(4, ok, f"{total - accepts}/{total} mutants rejected, every check named={unnamed == 0}, deterministic={stable}")


def test_criterion_5_zero_knowledge():
    puzzle, sol = sample_puzzle(), sample_solution()
    cfg = ProtocolConfig(9, "B", True)
    runs = 6000
    t0 = time.perf_counter()
    stats = default_statistics(cfg, runs)
    rep = compare_views(
        real_transcripts(puzzle, sol, cfg, range(1, runs + 1)),
        simulated_transcripts(puzzle, cfg, range(runs + 1, 2 * runs + 1)),
        stats,
        ALPHA,
    )
    rigged = compare_views(
        real_transcripts(puzzle, sol, cfg, range(1, 601), rigged=True),
        simulated_transcripts(puzzle, cfg, range(601, 1201)),
        [statistic("x1_row")],
        ALPHA,
    )
    dt = time.perf_counter() - t0
    for line in rep.lines():
        print("   ", line)
    ok = rep.flagged == [] and rigged.flagged == ["x1_row"] and dt < 300
    report(
        5,
        ok,
        f"{len(stats)} statistics, flagged={rep.flagged or 'none'}, rigged self-test flagged={rigged.flagged}, {dt:.0f}s",
    )


def _matrix(k, l):
    cells = [[Stack([CardId("a", i * l + j + 1)]) for j in range(l)] for i in range(k)]
    return MarkedMatrix(cells, [CardId("p", i + 1) for i in range(k)], [CardId("q", j + 1) for j in range(l)])


def test_criterion_6_machinery():
    rng = random.Random(6)
    restored = 0
    for _ in range(1000):
        k, l = rng.randint(1, 4), rng.randint(1, 9)
        m = _matrix(k, l)
        before = m.snapshot()
        t = Table(rng)
        for _ in range(rng.randint(1, 6)):
            if rng.random() < 0.5:
                t.row_shuffle(m, sorted(rng.sample(range(1, k + 1), rng.randint(1, k))))
            else:
                t.col_shuffle(m, sorted(rng.sample(range(1, l + 1), rng.randint(1, l))))
        t.rearrangement(m)
        restored += m.snapshot() == before

    exact = 0
    positions = Counter()
    helpers = [CardId("x", i) for i in range(1, 10)]
    for seed in range(9000):
        m = _matrix(3, 3)
        r = random.Random(seed)
        target = (seed % 3, (seed // 3) % 3)
        stacking = secret_stacking(m.positions(), helpers, target, r)
        res = Table(r).chosen_cut(m, [HelperRegion("A", "x", 1, stacking)])
        pos, card = res.located["A"]
        exact += card == CardId("a", target[0] * 3 + target[1] + 1)
        positions[pos] += 1
    p_pos = chisquare([positions[(i, j)] for i in range(3) for j in range(3)]).pvalue

    kept = 0
    for _ in range(500):
        names = [f"a{i}" for i in range(1, 10)]
        rng.shuffle(names)
        sigma = [Stack([CardId.parse(s)]) for s in names]
        ids = [id(s) for s in sigma]
        res = uniqueness_verify(Table(rng), sigma, helpers, {CardId("a", i) for i in range(1, 10)})
        kept += res.passed and [str(s.encoding) for s in sigma] == names and [id(s) for s in sigma] == ids

    ok = restored == 1000 and exact == 9000 and p_pos > ALPHA and kept == 500
    report(
        6,
        ok,
        f"rearrangement {restored}/1000, chosen cut exact {exact}/9000 position p={p_pos:.3f}, uniqueness order kept {kept}/500",
    )


def test_criterion_7_oracle():
    cases = [(n, p, s) for n, count in ((4, 20), (9, 17)) for p, s in corpus(n, count, seed=n)]
    agree = total = 0
    for i, (n, puzzle, claim) in enumerate(cases):
        truth = check_solution(puzzle, claim)
        for method, opt in CONFIGS:
            for seed in (i, i + 1000):
                verdict, _ = run_honest(puzzle, claim, ProtocolConfig(n, method, opt, seed=seed))
                agree += verdict.accepted == truth
                total += 1
    invalid = sum(not check_solution(p, s) for _, p, s in cases)
    ok = len(cases) >= 50 and agree == total
    report(7, ok, f"{len(cases)} pairs ({invalid} invalid), verdicts agree {agree}/{total}")


def test_criterion_8_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.jsonl"
        subprocess.run(
            [sys.executable, "-m", "cardsudoku.cli", "trace", "--method", "a", "--seed", "42", "--out", str(path)],
            check=True,
            capture_output=True,
        )
        outs.append(path.read_bytes())
    same_proc = all(
        run_honest(sample_puzzle(), sample_solution(), ProtocolConfig(9, m, o, seed=7))[1].dumps()
        == run_honest(sample_puzzle(), sample_solution(), ProtocolConfig(9, m, o, seed=7))[1].dumps()
        for m, o in CONFIGS
    )
    ok = outs[0] == outs[1] and same_proc
    report(8, ok, f"two processes byte-identical={outs[0] == outs[1]} ({len(outs[0])} bytes), all configs in-process={same_proc}")
