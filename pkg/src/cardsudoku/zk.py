"""Simulated verifier views and the statistics used to compare them with real ones.

The simulator never sees a solution.  It replays the public schedule and
samples every reveal from the distribution an honest run would produce:
uniformly ordered block cards, uniformly placed helpers over a stand-in
layout, uniformly ordered marking cards.
"""
from __future__ import annotations

import gc
import math
import random
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from scipy.stats import chi2_contingency

from .cards import CardId, block_labels, build_card_system
from .config import ProtocolConfig
from .grid import Grid, block_cells
from .plan import GroupCheck, check_cells, protocol_plan
from .table import MarkedMatrix, Table
from .transcript import Event, Transcript

ALPHA = 0.001
MIN_PER_OUTCOME = 5


class StatisticUndefined(ValueError):
    """The statistic does not exist for this configuration or transcript."""


class SampleTooSmall(ValueError):
    pass


# --------------------------------------------------------------------------
# simulator


@dataclass(frozen=True)
class _PassSkeleton:
    matrix: dict
    expected: tuple[str, ...]
    aux: tuple[str, ...]


@dataclass(frozen=True)
class _CheckSkeleton:
    check: GroupCheck
    matrix: dict
    labels: tuple[str, ...]
    b: int
    width: int


@lru_cache(maxsize=32)
def _skeleton(config: ProtocolConfig) -> tuple[tuple[_PassSkeleton, ...], tuple[_CheckSkeleton, ...]]:
    n, b = config.n, config.block_size
    labels = block_labels(n)
    plan = protocol_plan(config)
    system = build_card_system(n, config.method, config.optimized, config.group_size)
    passes = []
    for p in plan.passes:
        cells = [cell for blk in p.blocks for cell in block_cells(n, blk)]
        aux = [str(c) for lab in p.aux_sets for c in system.members(lab)][: len(cells)]
        matrix = {
            "purpose": "uniqueness",
            "dims": [1, len(cells)],
            "row_marks": [],
            "col_marks": aux,
            "blocks": [labels[blk].upper() for blk in p.blocks],
            "cells": [list(c) for c in cells],
        }
        expected = tuple(f"{labels[blk]}{j}" for blk in p.blocks for j in range(1, n + 1))
        passes.append(_PassSkeleton(matrix, expected, tuple(aux)))
    checks = []
    for check in plan.checks:
        cells = check_cells(n, check)
        width = len(cells[0])
        matrix = {
            "purpose": check.orientation,
            "blocks": [labels[blk].upper() for blk in check.blocks],
            "dims": [b, width],
            "cells": [[list(c) for c in row] for row in cells],
            "row_marks": [f"p{i}" for i in range(1, b + 1)],
            "col_marks": [f"q{j}" for j in range(1, width + 1)],
        }
        checks.append(_CheckSkeleton(check, matrix, tuple(labels[blk] for blk in check.blocks), b, width))
    return tuple(passes), tuple(checks)


def _stand_in(b: int, blocks: int) -> list[list[tuple[int, int]]]:
    """A layout in which every number sits in a different row in each block.

    Entry (t, v) means "block t's card for v".  It is the band of the
    standard pattern grid, so no solution knowledge goes into it.
    """
    n = b * b
    return [[(c // b, (b * i + c) % n + 1) for c in range(blocks * b)] for i in range(b)]


class _Sim:
    def __init__(self, transcript: Transcript, rng: random.Random) -> None:
        self.events = transcript.events
        self.rng = rng

    def emit(self, kind: str, data: dict) -> None:
        self.events.append(Event(kind, data))

    def shuffled(self, items: Sequence) -> list:
        out = list(items)
        self.rng.shuffle(out)
        return out

    def rearrangement(self, b: int, width: int) -> None:
        self.emit("shuffle", {"axis": "row", "indices": list(range(1, b + 1))})
        self.emit("shuffle", {"axis": "col", "indices": list(range(1, width + 1))})
        self.emit(
            "rearrange_restore",
            {
                "row_marks": self.shuffled([f"p{i}" for i in range(1, b + 1)]),
                "col_marks": self.shuffled([f"q{j}" for j in range(1, width + 1)]),
            },
        )

    def uniqueness(self, sk: _PassSkeleton) -> None:
        every = list(range(1, len(sk.expected) + 1))
        self.emit("form_matrix", sk.matrix)
        self.emit("shuffle", {"axis": "col", "indices": every})
        self.emit(
            "reveal",
            {"step": "uniqueness", "positions": [(0, j) for j in range(len(every))], "faces": self.shuffled(sk.expected)},
        )
        self.emit("shuffle", {"axis": "col", "indices": list(every)})
        self.emit("rearrange_restore", {"row_marks": [], "col_marks": self.shuffled(sk.aux)})

    def group_check(self, sk: _CheckSkeleton) -> None:
        check, b, width = sk.check, sk.b, sk.width
        rng = self.rng
        emit = self.events.append
        home = {}
        for i, row in enumerate(_stand_in(b, len(sk.labels))):
            for c, (t, v) in enumerate(row):
                home[(t, v)] = (i, c)
        # current row i holds home row rows[i]; likewise for columns
        rows, cols = list(range(b)), list(range(width))
        every_row = list(range(1, b + 1))
        if check.merged:
            spans = [(0, width)]
        else:
            spans = [(t * b, (t + 1) * b) for t in range(len(sk.labels))]
        order = [(i, c) for i in range(b) for c in range(width)]
        hsets = check.helper_sets
        helper_faces = [[f"{hs}{k}" for k in range(width * b + 1)] for hs in hsets]
        emit(Event("form_matrix", sk.matrix))
        for j in check.numbers:
            regions = [[c for c in range(width) if cols[c] // b == t] for t in range(len(hsets))]
            for t, hs in enumerate(hsets):
                cells = [(i, c) for i in range(b) for c in regions[t]]
                emit(Event("stack_helpers_secret", {"region": sk.labels[t].upper(), "helpers": hs, "number": j, "cells": cells}))
            rng.shuffle(rows)
            emit(Event("shuffle", {"axis": "row", "indices": list(every_row)}))
            for lo, hi in spans:
                part = cols[lo:hi]
                rng.shuffle(part)
                cols[lo:hi] = part
                emit(Event("shuffle", {"axis": "col", "indices": list(range(lo + 1, hi + 1))}))

            faces = [""] * (b * width)
            targets = []
            for t in range(len(hsets)):
                hi, hc = home[(t, j)]
                target = (rows.index(hi), cols.index(hc))
                targets.append(target)
                region = [c for c in range(width) if cols[c] // b == t]
                numbers = list(range(2, b * len(region) + 1))
                rng.shuffle(numbers)
                names = helper_faces[t]
                it = iter(numbers)
                for i in range(b):
                    for c in region:
                        faces[i * width + c] = names[1] if (i, c) == target else names[next(it)]
            emit(Event("reveal", {"step": "helpers", "positions": list(order), "faces": faces}))
            emit(Event("reveal", {"step": "targets", "positions": targets, "faces": [f"{lab}{j}" for lab in sk.labels]}))
            emit(Event("remove_helpers", {}))
            if check.rearrange_each_round:
                self.rearrangement(b, width)
                rows, cols = list(range(b)), list(range(width))
        if check.rearrange_at_end and not check.rearrange_each_round:
            self.rearrangement(b, width)


def simulate_transcript(puzzle: Grid, config: ProtocolConfig, rng: random.Random) -> Transcript:
    """Produce an accepting-run transcript from the puzzle alone."""
    if puzzle.n != config.n:
        raise ValueError(f"puzzle is {puzzle.n}x{puzzle.n} but config says n={config.n}")
    n = config.n
    labels = block_labels(n)
    b = config.block_size
    t = Transcript(puzzle, config)
    sim = _Sim(t, rng)
    for r in range(n):
        for c in range(n):
            v = puzzle[(r, c)]
            if v:
                sim.emit("place_public", {"cell": [r, c], "card": f"{labels[(r // b) * b + c // b]}{v}"})
            else:
                sim.emit("place_secret", {"cell": [r, c]})
    passes, checks = _skeleton(config)
    for sk in passes:
        sim.uniqueness(sk)
    for ck in checks:
        sim.group_check(ck)
    sim.emit("verdict", {"accepted": True, "reason": None, "check": None})
    return t


# --------------------------------------------------------------------------
# view statistics


def _check_starts(t: Transcript) -> list[int]:
    cached = t.__dict__.get("_check_starts")
    if cached is None or cached[0] != len(t.events):
        starts = [i for i, e in enumerate(t.events) if e.kind == "form_matrix" and e.data["purpose"] != "uniqueness"]
        cached = (len(t.events), starts)
        t.__dict__["_check_starts"] = cached
    return cached[1]


def _group_checks(t: Transcript, index: int) -> list[Event]:
    """Events of the ``index``-th group check (negative counts from the end)."""
    starts = _check_starts(t)
    if not starts or not -len(starts) <= index < len(starts):
        raise StatisticUndefined(f"transcript has no group check {index}")
    index %= len(starts)
    hi = starts[index + 1] if index + 1 < len(starts) else len(t.events)
    return t.events[starts[index]:hi]


def _first(events: Iterable[Event], kind: str, nth: int = 0, **match) -> Event:
    seen = 0
    for e in events:
        if e.kind == kind and all(e.data.get(k) == v for k, v in match.items()):
            if seen == nth:
                return e
            seen += 1
    raise StatisticUndefined(f"no {kind} event #{nth} matching {match}")


def _first_pass(t: Transcript) -> list[Event]:
    out = []
    started = False
    for e in t.events:
        if e.kind == "form_matrix":
            if started:
                break
            started = e.data["purpose"] == "uniqueness"
        if started:
            out.append(e)
    if not out:
        raise StatisticUndefined("transcript has no uniqueness pass")
    return out


def _helper_positions(reveal: Event, number: int = 1) -> dict[str, tuple[int, int]]:
    """Helper set -> position of its card with the given index."""
    out = {}
    for p, f in zip(reveal.data["positions"], reveal.data["faces"]):
        card = CardId.parse(f)
        if card.index == number:
            out[card.set_label] = tuple(p)
    return out


def _pointer_positions(events: list[Event], round_: int) -> list[tuple[int, int]]:
    found = _helper_positions(_first(events, "reveal", round_, step="helpers"))
    return [found[hs] for hs in sorted(found)]


@dataclass(frozen=True)
class ViewStatistic:
    """A named map from a transcript to one discrete outcome."""

    name: str
    description: str
    outcomes: Callable[[ProtocolConfig], int]
    fn: Callable[[Transcript], object]
    methods: str = "AB"

    def applies(self, config: ProtocolConfig) -> bool:
        return config.method in self.methods

    def space(self, config: ProtocolConfig) -> int:
        return self.outcomes(config)


def project(t: Transcript, stat: ViewStatistic):
    if not stat.applies(t.config):
        raise StatisticUndefined(f"{stat.name} is not defined for method {t.config.method}")
    return stat.fn(t)


def _pass_size(c: ProtocolConfig) -> int:
    return c.n * c.blocks_per_pass


def _regions(c: ProtocolConfig) -> int:
    return c.block_size if c.method == "A" else 2


def _row_space(c: ProtocolConfig) -> int:
    b = c.block_size
    return math.perm(b, min(_regions(c), b))


def _col_space(c: ProtocolConfig) -> int:
    b, r = c.block_size, _regions(c)
    return math.perm(r * b, r) if c.optimized else b ** r


def _uniq_first_face(t: Transcript):
    return _first(_first_pass(t), "reveal", step="uniqueness").data["faces"][0]


def _uniq_a1_position(t: Transcript):
    faces = _first(_first_pass(t), "reveal", step="uniqueness").data["faces"]
    return faces.index(f"{block_labels(t.config.n)[0]}1")


def _uniq_mark_head(t: Transcript):
    return _first(_first_pass(t), "rearrange_restore").data["col_marks"][0]


def _cut_rows(t: Transcript):
    return tuple(p[0] for p in _pointer_positions(_group_checks(t, 0), 0))


def _cut_x1_row(t: Transcript):
    return _pointer_positions(_group_checks(t, 0), 0)[0][0]


def _cut_cols(t: Transcript):
    return tuple(p[1] for p in _pointer_positions(_group_checks(t, 0), 0))


def _cut_joint(t: Transcript):
    return tuple(_pointer_positions(_group_checks(t, 0), 0))


def _cut_x2(t: Transcript):
    reveal = _first(_group_checks(t, 0), "reveal", 0, step="helpers")
    return _helper_positions(reveal, 2)["x"]


def _round2_rows(t: Transcript):
    return tuple(p[0] for p in _pointer_positions(_group_checks(t, 0), 1))


def _restore(t: Transcript) -> dict:
    return _first(_group_checks(t, 0), "rearrange_restore").data


def _row_mark_order(t: Transcript):
    return tuple(_restore(t)["row_marks"])


def _q1_position(t: Transcript):
    return _restore(t)["col_marks"].index("q1")


def _col_mark_order(t: Transcript):
    return tuple(_restore(t)["col_marks"])


def _last_rows(t: Transcript):
    return tuple(p[0] for p in _pointer_positions(_group_checks(t, -1), 0))


def _width(c: ProtocolConfig) -> int:
    return _regions(c) * c.block_size


STATISTICS: tuple[ViewStatistic, ...] = (
    ViewStatistic("uniqueness_first_face", "first card face revealed in the first block pass", _pass_size, _uniq_first_face),
    ViewStatistic("uniqueness_a1_position", "position of the first block's card 1 in that reveal", _pass_size, _uniq_a1_position),
    ViewStatistic("uniqueness_mark_head", "first marking card shown when the first pass is restored", _pass_size, _uniq_mark_head),
    ViewStatistic("cut_rows", "rows of the index-1 helpers in the first chosen cut", _row_space, _cut_rows),
    ViewStatistic("x1_row", "row of helper x1 in the first chosen cut", lambda c: c.block_size, _cut_x1_row),
    ViewStatistic("cut_cols", "columns of the index-1 helpers in the first chosen cut", _col_space, _cut_cols),
    ViewStatistic("cut_joint", "(row, column) of every index-1 helper in the first chosen cut", lambda c: _row_space(c) * _col_space(c), _cut_joint),
    ViewStatistic("x2_position", "position of helper x2 in the first chosen cut", lambda c: c.block_size * _width(c), _cut_x2),
    ViewStatistic("round2_rows", "rows of the index-1 helpers in the second round", _row_space, _round2_rows),
    ViewStatistic("row_mark_order", "order of the row marks at the first rearrangement", lambda c: math.factorial(c.block_size), _row_mark_order),
    ViewStatistic("q1_position", "position of q1 at the first rearrangement", _width, _q1_position),
    ViewStatistic("col_mark_order", "full column-mark order at the first rearrangement", lambda c: math.factorial(_width(c)), _col_mark_order, methods="B"),
    ViewStatistic("last_check_rows", "rows of the index-1 helpers in the final check's first round", _row_space, _last_rows),
)


def statistic(name: str) -> ViewStatistic:
    for s in STATISTICS:
        if s.name == name:
            return s
    raise KeyError(name)


CORE = ("uniqueness_a1_position", "cut_rows", "x1_row", "cut_cols", "row_mark_order")


def core_statistics(config: ProtocolConfig) -> list[ViewStatistic]:
    """Statistics every comparison must include; they set the minimum run count."""
    return [statistic(name) for name in CORE]


def default_statistics(config: ProtocolConfig, runs: int) -> list[ViewStatistic]:
    """Every statistic that applies to ``config`` and that ``runs`` samples can support."""
    return [s for s in STATISTICS if s.applies(config) and runs >= MIN_PER_OUTCOME * s.space(config)]


# --------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class StatResult:
    name: str
    outcomes: int
    chi2: float
    dof: int
    p_value: float
    flagged: bool


@dataclass(frozen=True)
class ZkReport:
    real_runs: int
    sim_runs: int
    alpha: float
    threshold: float
    results: tuple[StatResult, ...]

    @property
    def flagged(self) -> list[str]:
        return [r.name for r in self.results if r.flagged]

    def lines(self) -> list[str]:
        out = [f"real={self.real_runs} sim={self.sim_runs} alpha={self.alpha} per_stat={self.threshold:.3g}"]
        for r in self.results:
            mark = "FLAGGED" if r.flagged else "ok"
            out.append(f"{r.name} outcomes={r.outcomes} chi2={r.chi2:.2f} dof={r.dof} p={r.p_value:.4g} {mark}")
        return out


@contextmanager
def _cycle_gc_paused():
    # runs build no reference cycles, so refcounting frees each transcript;
    # the cycle collector would only rescan thousands of live events per run
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


def tally(transcripts: Iterable[Transcript], stats: Sequence[ViewStatistic]) -> tuple[int, list[Counter]]:
    """Project each transcript as it arrives so samples never sit in memory."""
    counts = [Counter() for _ in stats]
    total = 0
    with _cycle_gc_paused():
        for t in transcripts:
            total += 1
            for s, cnt in zip(stats, counts):
                cnt[project(t, s)] += 1
    return total, counts


def two_sample_chi2(a: Counter, b: Counter) -> tuple[float, int, float]:
    keys = sorted(set(a) | set(b), key=repr)
    if len(keys) < 2:
        return 0.0, 0, 1.0
    table = [[a[k] for k in keys], [b[k] for k in keys]]
    chi2, p, dof, _ = chi2_contingency(table, correction=False)
    return float(chi2), int(dof), float(p)


def compare_counts(
    config: ProtocolConfig,
    stats: Sequence[ViewStatistic],
    real: tuple[int, list[Counter]],
    sim: tuple[int, list[Counter]],
    alpha: float = ALPHA,
) -> ZkReport:
    n_real, c_real = real
    n_sim, c_sim = sim
    threshold = alpha / max(len(stats), 1)
    results = []
    for s, a, b in zip(stats, c_real, c_sim):
        chi2, dof, p = two_sample_chi2(a, b)
        results.append(StatResult(s.name, s.space(config), chi2, dof, p, p < threshold))
    return ZkReport(n_real, n_sim, alpha, threshold, tuple(results))


def check_sample_size(config: ProtocolConfig, stats: Sequence[ViewStatistic], runs: int) -> None:
    for s in stats:
        if not s.applies(config):
            raise StatisticUndefined(f"{s.name} is not defined for method {config.method}")
        need = MIN_PER_OUTCOME * s.space(config)
        if runs < need:
            raise SampleTooSmall(f"{s.name} has {s.space(config)} outcomes and needs at least {need} runs, got {runs}")


def compare_views(
    real: Iterable[Transcript],
    sim: Iterable[Transcript],
    stats: Sequence[ViewStatistic],
    alpha: float = ALPHA,
) -> ZkReport:
    """Two-sample chi-square per statistic, Bonferroni-corrected over ``stats``.

    Both inputs may be generators; the first transcript fixes the
    configuration used to size outcome spaces.
    """
    real_it, sim_it = iter(real), iter(sim)
    try:
        head = next(real_it)
    except StopIteration:
        raise SampleTooSmall("no real transcripts") from None
    config = head.config

    def chain(first, rest):
        yield first
        yield from rest

    r = tally(chain(head, real_it), stats)
    s = tally(sim_it, stats)
    check_sample_size(config, stats, min(r[0], s[0]))
    return compare_counts(config, stats, r, s, alpha)


# --------------------------------------------------------------------------
# planted deviation


class RiggedTable(Table):
    """Shuffle source that never lets the stack under x1 land in row 1.

    Used to prove the comparison notices a real leak.
    """

    def draw(self, m: MarkedMatrix, axis: str, indices: Sequence[int]) -> list[int]:
        perm = super().draw(m, axis, indices)
        if axis != "row" or 1 not in indices:
            return perm
        x1 = CardId("x", 1)
        hot = next((i + 1 for i, row in enumerate(m.cells) if any(st.cards and st.cards[0] == x1 for st in row)), None)
        while hot is not None and perm[list(indices).index(1)] == hot:
            perm = super().draw(m, axis, indices)
        return perm


# --------------------------------------------------------------------------
# sampling helpers


def real_transcripts(puzzle: Grid, solution: Grid, config: ProtocolConfig, seeds: Iterable[int], rigged: bool = False):
    from .protocol import run_honest

    factory = RiggedTable if rigged else Table
    for seed in seeds:
        verdict, t = run_honest(puzzle, solution, config.with_seed(seed), table_factory=factory)
        if not verdict.accepted:
            raise AssertionError(f"honest run rejected at seed {seed}: {verdict.rejection_reason}")
        yield t


def simulated_transcripts(puzzle: Grid, config: ProtocolConfig, seeds: Iterable[int]):
    for seed in seeds:
        yield simulate_transcript(puzzle, config.with_seed(seed), random.Random(f"sim/{seed}"))
