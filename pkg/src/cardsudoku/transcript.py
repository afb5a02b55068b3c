"""The verifier's view of a run as an append-only event log.

Serialized form is JSON Lines: a header object, then one event per line with
sorted keys, so equal runs give byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

from .config import ProtocolConfig
from .grid import Grid

FORMAT = "cardsudoku-transcript"
VERSION = 1

EVENT_KINDS = frozenset(
    {
        "place_public",
        "place_secret",
        "form_matrix",
        "stack_helpers_secret",
        "shuffle",
        "reveal",
        "rearrange_restore",
        "remove_helpers",
        "verdict",
    }
)


class TranscriptError(ValueError):
    pass


class Event(NamedTuple):
    kind: str
    data: dict

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, **self.data}, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "Event":
        obj = json.loads(line)
        kind = obj.pop("kind")
        if kind not in EVENT_KINDS:
            raise TranscriptError(f"unknown event kind {kind!r}")
        return cls(kind, obj)


@dataclass
class Transcript:
    puzzle: Grid
    config: ProtocolConfig
    events: list[Event] = field(default_factory=list)

    def append(self, kind: str, data: dict) -> Event:
        if kind not in EVENT_KINDS:
            raise TranscriptError(f"unknown event kind {kind!r}")
        ev = Event(kind, data)
        self.events.append(ev)
        return ev

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def kinds(self) -> list[str]:
        return [e.kind for e in self.events]

    def of_kind(self, kind: str, **match) -> list[Event]:
        return [e for e in self.events if e.kind == kind and all(e.data.get(k) == v for k, v in match.items())]

    def header(self) -> dict:
        c = self.config
        return {
            "format": FORMAT,
            "version": VERSION,
            "n": c.n,
            "method": c.method,
            "optimized": c.optimized,
            "seed": c.seed,
            "group_size": c.blocks_per_pass,
            "puzzle": [list(row) for row in self.puzzle.cells],
        }

    def dumps(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True, separators=(",", ":"))]
        lines += [e.to_json() for e in self.events]
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise TranscriptError("empty transcript")
        head = json.loads(lines[0])
        if head.get("format") != FORMAT or head.get("version") != VERSION:
            raise TranscriptError(f"unsupported transcript header {head.get('format')!r} v{head.get('version')!r}")
        optimized = head["optimized"]
        config = ProtocolConfig(
            head["n"], head["method"], optimized, head["seed"], head["group_size"] if optimized else None
        )
        return cls(Grid.from_rows(head["puzzle"]), config, [Event.from_json(ln) for ln in lines[1:]])

    @classmethod
    def read(cls, path: str | Path) -> "Transcript":
        return cls.loads(Path(path).read_text(encoding="utf-8"))
