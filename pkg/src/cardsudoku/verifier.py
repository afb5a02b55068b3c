"""Verifier decision procedure over public events only.

The same :class:`Verifier` runs live beside the protocol driver and offline
over a deserialized transcript; both must reach the same verdict.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .cards import CardId, block_labels, expected_card_count
from .config import ProtocolConfig
from .grid import Grid
from .plan import protocol_plan
from .transcript import Event, Transcript


class Rejected(Exception):
    def __init__(self, check: str, step: str, detail: str) -> None:
        super().__init__(f"{check} check failed at {step}: {detail}")
        self.check = check
        self.step = step
        self.detail = detail


@dataclass(frozen=True)
class RunStats:
    shuffles: int
    cards: int
    reveals: int


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    rejection_reason: str | None
    failed_check: str | None
    stats: RunStats

    def __post_init__(self) -> None:
        if self.accepted != (self.rejection_reason is None):
            raise ValueError("accepted verdicts carry no rejection reason, rejected ones must")

    def summary(self) -> str:
        s = self.stats
        head = "accepted" if self.accepted else "rejected"
        return f"verdict={head} cards={s.cards} shuffles={s.shuffles} reveals={s.reveals}"


class Verifier:
    """Consumes events one at a time and raises :class:`Rejected` on a failed check.

    ``check_rows`` exists only so test harnesses can demonstrate that they
    notice a broken verifier.
    """

    def __init__(self, puzzle: Grid, config: ProtocolConfig, *, check_rows: bool = True) -> None:
        self.puzzle = puzzle
        self.config = config
        self.check_rows = check_rows
        self.labels = block_labels(config.n)
        self._by_upper = {lab.upper(): lab for lab in self.labels}
        plan = protocol_plan(config)
        self._passes_due = len(plan.passes)
        self._rounds_due = plan.rounds()
        self._passes_done = 0
        self._rounds_done = 0
        self._placed: set[CardId] = set()
        self._cells_placed: set[tuple[int, int]] = set()
        self._matrix: dict | None = None
        self._regions: dict[str, tuple[str, int]] = {}
        self._helpers: dict[str, tuple[int, int]] = {}
        self.shuffles = 0
        self.reveals = 0
    def _block_label(self, r: int, c: int) -> str:
        b = self.config.block_size
        return self.labels[(r // b) * b + c // b]

    def observe(self, event: Event) -> None:
        handler = _HANDLERS.get(event.kind)
        if handler is not None:
            handler(self, event.data)

    def _on_place_public(self, d: dict) -> None:
        r, c = d["cell"]
        card = CardId.parse(d["card"])
        value = self.puzzle[(r, c)]
        expected = CardId(self._block_label(r, c), value)
        if value == 0 or card != expected:
            raise Rejected("givens", "placement", f"cell ({r + 1},{c + 1}) got {card}, given requires {expected}")
        if card in self._placed:
            raise Rejected("givens", "placement", f"card {card} is needed twice: givens are inconsistent")
        self._placed.add(card)
        self._cells_placed.add((r, c))

    def _on_place_secret(self, d: dict) -> None:
        r, c = d["cell"]
        if self.puzzle[(r, c)] != 0:
            raise Rejected("givens", "placement", f"given cell ({r + 1},{c + 1}) placed secretly")
        self._cells_placed.add((r, c))

    def _on_form_matrix(self, d: dict) -> None:
        if len(self._cells_placed) != self.config.n ** 2:
            raise Rejected("placement", "form_matrix", "not every cell carries a card")
        self._matrix = d
        self._helpers = {}
        self._regions = {}

    def _on_shuffle(self, d: dict) -> None:
        self.shuffles += 1

    def _on_stack_helpers_secret(self, d: dict) -> None:
        self._regions[d["helpers"]] = (self._by_upper[d["region"]], d["number"])

    def _on_reveal(self, d: dict) -> None:
        self.reveals += 1
        step = d["step"]
        if step == "uniqueness":
            self._check_uniqueness([CardId.parse(f) for f in d["faces"]])
        elif step == "helpers":
            faces = d["faces"]
            for hs in self._regions:
                if faces.count(f"{hs}1") != 1:
                    raise Rejected("helpers", self._where(), f"helper {hs}1 not revealed exactly once")
            self._helpers = {f: tuple(p) for p, f in zip(d["positions"], faces)}
        elif step == "targets":
            self._check_targets({tuple(p): CardId.parse(f) for p, f in zip(d["positions"], d["faces"])})
        else:
            raise Rejected("protocol", step, f"unknown reveal step {step!r}")

    def _on_rearrange_restore(self, d: dict) -> None:
        self.reveals += 1
        m = self._matrix or {}
        for key in ("row_marks", "col_marks"):
            if sorted(d[key]) != sorted(m.get(key, [])):
                raise Rejected("marks", "rearrangement", f"{key} revealed {d[key]}")

    def _on_remove_helpers(self, d: dict) -> None:
        self._regions = {}
        self._helpers = {}

    def _where(self) -> str:
        m = self._matrix or {}
        blocks = ",".join(m.get("blocks", []))
        return f"{m.get('purpose', '?')}[{blocks}]"

    def _check_uniqueness(self, faces: list[CardId]) -> None:
        m = self._matrix or {}
        blocks = [self._by_upper[b] for b in m.get("blocks", [])]
        expected = Counter(CardId(lab, j) for lab in blocks for j in range(1, self.config.n + 1))
        got = Counter(faces)
        if got != expected:
            extra = sorted(got - expected)
            missing = sorted(expected - got)
            if len(blocks) == 1:
                detail = f"Block {blocks[0].upper()} revealed {', '.join(map(str, extra))} outside its set"
            else:
                detail = f"extra {', '.join(map(str, extra))}; missing {', '.join(map(str, missing))}"
            raise Rejected("block", self._where(), detail)
        self._passes_done += 1

    def _check_targets(self, targets: dict[tuple[int, int], CardId]) -> None:
        rows: dict[int, CardId] = {}
        for hs, (lab, j) in self._regions.items():
            pos = self._helpers[f"{hs}1"]
            want = CardId(lab, j)
            got = targets.get(pos)
            if got != want:
                raise Rejected("face", f"{self._where()} number {j}", f"under {hs}1 expected {want}, found {got}")
            if pos[0] in rows and self.check_rows:
                kind = "row" if (self._matrix or {}).get("purpose") == "rows" else "column"
                raise Rejected(
                    kind,
                    f"{self._where()} number {j}",
                    f"{rows[pos[0]]} and {want} lie in the same {kind}",
                )
            rows[pos[0]] = want
        self._rounds_done += 1

    def finish(self) -> None:
        if self._passes_done != self._passes_due or self._rounds_done != self._rounds_due:
            raise Rejected(
                "incomplete",
                "end",
                f"{self._passes_done}/{self._passes_due} block passes, {self._rounds_done}/{self._rounds_due} rounds",
            )

    def stats(self) -> RunStats:
        return RunStats(self.shuffles, expected_card_count(self.config.n, self.config.method), self.reveals)


# looked up per class, not per instance, so a verifier holds no reference to itself
_HANDLERS = {
    kind: getattr(Verifier, f"_on_{kind}")
    for kind in (
        "place_public",
        "place_secret",
        "form_matrix",
        "shuffle",
        "stack_helpers_secret",
        "reveal",
        "rearrange_restore",
        "remove_helpers",
    )
}


def replay(transcript: Transcript, *, check_rows: bool = True) -> Verdict:
    """Recompute the verdict of a recorded run from its public events."""
    v = Verifier(transcript.puzzle, transcript.config, check_rows=check_rows)
    try:
        for ev in transcript:
            if ev.kind != "verdict":
                v.observe(ev)
        v.finish()
    except Rejected as rej:
        return Verdict(False, str(rej), rej.check, v.stats())
    return Verdict(True, None, None, v.stats())
