"""Card identities, card inventories and the two-deck physical mapping.

Every card belongs to a *set* (a label such as ``a`` or ``x``) and carries an
index inside that set.  Encoding sets are one per block, marking sets are
``p`` (Column 0) and ``q`` (Row 0), and helping sets are ``x``, ``y``, ...

Front and back faces are abstract small integers; only their equality
classes matter to the protocol.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from itertools import combinations
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

MARKING_SETS = ("p", "q")
_HELPER_LETTERS = "xyzwvu"
_RESERVED = set(MARKING_SETS) | set(_HELPER_LETTERS)
_CARD_RE = re.compile(r"^([a-z]+)(\d+)$")


class CardError(ValueError):
    """Raised for invalid puzzle sizes or unsupported card configurations."""


class CardId(NamedTuple):
    set_label: str
    index: int

    def __str__(self) -> str:
        return f"{self.set_label}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "CardId":
        return _parse_card(text)


@lru_cache(maxsize=4096)
def _parse_card(text: str) -> CardId:
    m = _CARD_RE.match(text)
    if not m:
        raise CardError(f"not a card id: {text!r}")
    return CardId(m.group(1), int(m.group(2)))


@dataclass(frozen=True)
class CardSpec:
    id: CardId
    front: int
    back: int


@dataclass(frozen=True)
class FrontConstraint:
    """Cards of ``sets`` are mixed by some shuffle and must stay tellable apart.

    ``same_back`` additionally requires one common back across the sets.
    """

    sets: tuple[str, ...]
    same_back: bool
    reason: str


@dataclass(frozen=True)
class Violation:
    cards: tuple[CardId, ...]
    message: str

    def __str__(self) -> str:
        return f"{', '.join(map(str, self.cards))}: {self.message}"


def isqrt_exact(n: int) -> int:
    """Return the block size of an ``n`` x ``n`` Sudoku, or raise CardError."""
    if not isinstance(n, int) or n < 4:
        raise CardError(f"invalid size {n!r}: need a perfect square >= 4")
    b = math.isqrt(n)
    if b * b != n:
        raise CardError(f"invalid size {n}: not a perfect square")
    return b


def _alpha_labels(count: int, exclude: set[str]) -> list[str]:
    out: list[str] = []
    width = 1
    while len(out) < count:
        for combo in _words(width):
            if combo not in exclude:
                out.append(combo)
                if len(out) == count:
                    break
        width += 1
    return out


def _words(width: int) -> Iterable[str]:
    letters = "abcdefghijklmnopqrstuvwxyz"
    if width == 1:
        yield from letters
        return
    for head in letters:
        for tail in _words(width - 1):
            yield head + tail


def block_labels(n: int) -> list[str]:
    """Encoding-set labels per block, row-major (``a``..``i`` for n=9).

    Past the ninth block the alphabet continues, skipping letters that belong
    to marking and helping sets.
    """
    return _alpha_labels(n, _RESERVED)


def helper_labels(n: int, method: str) -> list[str]:
    if method == "B":
        return ["x", "y"]
    b = isqrt_exact(n)
    if b <= len(_HELPER_LETTERS):
        return list(_HELPER_LETTERS[:b])
    return [f"x{'x' * k}" for k in range(b)]


def _check_method(method: str) -> str:
    m = method.upper()
    if m not in ("A", "B"):
        raise CardError(f"unknown method {method!r}")
    return m


def default_group_size(n: int, method: str, optimized: bool) -> int:
    """Blocks checked per uniqueness pass in block verification."""
    if not optimized:
        return 1
    b = isqrt_exact(n)
    if method == "A":
        return b
    return 3 if n == 9 else 2


def max_group_size(n: int, method: str) -> int:
    b = isqrt_exact(n)
    if method == "A":
        return b
    # 2n helpers plus 3*sqrt(n) marking cards serve as auxiliary cards
    return (2 * n + 3 * b) // n


def block_groups(n: int, group_size: int) -> list[tuple[int, ...]]:
    return [tuple(range(s, min(s + group_size, n))) for s in range(0, n, group_size)]


def uniqueness_aux_sets(n: int, method: str, optimized: bool, group_size: int) -> list[str]:
    """Sets lent as auxiliary cards to one uniqueness pass over ``group_size`` blocks."""
    if not optimized or group_size == 1:
        return ["x"]
    helpers = helper_labels(n, method)
    if method == "A":
        return helpers[:group_size]
    if group_size <= 2:
        return helpers[:group_size]
    return ["x", "y", "p", "q"]


def set_sizes(n: int, method: str) -> dict[str, int]:
    """Size of every card set for the given variant, in canonical order."""
    method = _check_method(method)
    b = isqrt_exact(n)
    sizes = {label: n for label in block_labels(n)}
    sizes["p"] = b
    sizes["q"] = n if method == "A" else 2 * b
    for label in helper_labels(n, method):
        sizes[label] = n
    return sizes


def required_constraints(
    n: int, method: str, optimized: bool, group_size: int | None = None
) -> list[FrontConstraint]:
    method = _check_method(method)
    if not optimized:
        return []
    g = group_size or default_group_size(n, method, optimized)
    labels = block_labels(n)
    out: list[FrontConstraint] = []
    aux = uniqueness_aux_sets(n, method, optimized, g)
    if len(aux) > 1:
        out.append(FrontConstraint(tuple(aux), True, "auxiliary cards of a merged uniqueness pass"))
    for group in block_groups(n, g):
        if len(group) > 1:
            out.append(
                FrontConstraint(
                    tuple(labels[i] for i in group), False, "blocks revealed together in block verification"
                )
            )
    helpers = helper_labels(n, method)
    if len(helpers) > 1:
        out.append(FrontConstraint(tuple(helpers), True, "helping sets mixed by a merged column shuffle"))
    return out


@dataclass(frozen=True)
class CardSystem:
    n: int
    method: str
    optimized: bool
    cards: tuple[CardSpec, ...]
    constraints: tuple[FrontConstraint, ...] = ()
    group_size: int = 1
    _index: dict = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {c.id: c for c in self.cards})

    def __len__(self) -> int:
        return len(self.cards)

    def __contains__(self, card: CardId) -> bool:
        return card in self._index

    def spec(self, card: CardId) -> CardSpec:
        return self._index[card]

    @property
    def block_size(self) -> int:
        return math.isqrt(self.n)

    @property
    def set_labels(self) -> list[str]:
        return list(dict.fromkeys(c.id.set_label for c in self.cards))

    def members(self, label: str) -> list[CardId]:
        return [c.id for c in self.cards if c.id.set_label == label]

    def count_by_role(self) -> dict[str, int]:
        blocks = set(block_labels(self.n))
        roles = {"encoding": 0, "marking": 0, "helping": 0}
        for c in self.cards:
            lab = c.id.set_label
            role = "encoding" if lab in blocks else "marking" if lab in MARKING_SETS else "helping"
            roles[role] += 1
        return roles

    def with_face(self, card: CardId, *, front: int | None = None, back: int | None = None) -> "CardSystem":
        spec = self.spec(card)
        new = replace(
            spec,
            front=spec.front if front is None else front,
            back=spec.back if back is None else back,
        )
        cards = tuple(new if c.id == card else c for c in self.cards)
        return replace(self, cards=cards)


def build_card_system(
    n: int,
    method: str = "B",
    optimized: bool = True,
    group_size: int | None = None,
    shared_back: bool = False,
) -> CardSystem:
    """Build the full card inventory for an ``n`` x ``n`` puzzle.

    Fronts are globally distinct integers.  Each set gets its own back unless
    ``shared_back`` is set, except that sets tied by a same-back constraint
    always share one.
    """
    method = _check_method(method)
    isqrt_exact(n)
    g = group_size or default_group_size(n, method, optimized)
    if not optimized and g != 1:
        raise CardError("grouped block verification requires the optimized variant")
    if g < 1 or g > max_group_size(n, method):
        raise CardError(f"group size {g} unsupported for n={n}, method {method}")
    constraints = required_constraints(n, method, optimized, g)

    backs: dict[str, int] = {}
    for label in set_sizes(n, method):
        backs[label] = 0 if shared_back else len(backs)
    for con in constraints:
        if con.same_back:
            shared = backs[con.sets[0]]
            for label in con.sets:
                backs[label] = shared

    cards = []
    front = 0
    for label, size in set_sizes(n, method).items():
        for idx in range(1, size + 1):
            cards.append(CardSpec(CardId(label, idx), front, backs[label]))
            front += 1
    return CardSystem(n, method, optimized, tuple(cards), tuple(constraints), g)


def expected_card_count(n: int, method: str) -> int:
    b = isqrt_exact(n)
    if _check_method(method) == "A":
        return n * n + n * b + n + b
    return n * n + 2 * n + 3 * b


def validate_distinguishability(
    system: CardSystem, method: str | None = None, optimized: bool | None = None, group_size: int | None = None
) -> list[Violation]:
    """Return every violated distinguishability requirement (empty means ok)."""
    method = _check_method(method or system.method)
    optimized = system.optimized if optimized is None else optimized
    if group_size is None:
        group_size = system.group_size if optimized == system.optimized else None
    violations: list[Violation] = []
    by_set: dict[str, list[CardSpec]] = {}
    for c in system.cards:
        by_set.setdefault(c.id.set_label, []).append(c)

    for label, specs in by_set.items():
        violations.extend(_front_clashes(specs, f"same front within set {label}"))
        backs = {s.back for s in specs}
        if len(backs) > 1:
            violations.append(Violation(tuple(s.id for s in specs), f"set {label} has {len(backs)} different backs"))

    for con in required_constraints(system.n, method, optimized, group_size):
        specs = [s for label in con.sets for s in by_set.get(label, [])]
        violations.extend(_front_clashes(specs, f"same front across {'/'.join(con.sets)} ({con.reason})"))
        if con.same_back and len({s.back for s in specs}) > 1:
            violations.append(
                Violation(tuple(s.id for s in specs[:1]), f"sets {'/'.join(con.sets)} need one common back")
            )
    return violations


def _front_clashes(specs: Sequence[CardSpec], message: str) -> list[Violation]:
    within = message.startswith("same front within")
    by_front: dict[int, list[CardSpec]] = {}
    for s in specs:
        by_front.setdefault(s.front, []).append(s)
    out = []
    for group in by_front.values():
        for u, v in combinations(group, 2):
            if within or u.id.set_label != v.id.set_label:
                out.append(Violation((u.id, v.id), message))
    return out


# -- physical decks ---------------------------------------------------------

RANKS = ("A", "2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K")
SUITS = ("♠", "♥", "♦", "♣")
DECK_SIZE = 54


@dataclass(frozen=True)
class PhysicalCard:
    deck: int
    slot: int
    name: str


@dataclass(frozen=True)
class DeckAssignment:
    mapping: dict[CardId, PhysicalCard]

    def deck_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {}
        for pc in self.mapping.values():
            sizes[pc.deck] = sizes.get(pc.deck, 0) + 1
        return sizes

    def to_text(self) -> str:
        lines = [f"{cid}\tdeck{pc.deck}\t{pc.name}" for cid, pc in sorted(self.mapping.items(), key=_card_order)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DeckAssignment":
        mapping = {}
        slots: dict[int, int] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            cid, deck, name = line.split("\t")
            d = int(deck.removeprefix("deck"))
            mapping[CardId.parse(cid)] = PhysicalCard(d, slots.get(d, 0), name)
            slots[d] = slots.get(d, 0) + 1
        return cls(mapping)


def _card_order(item: tuple[CardId, PhysicalCard]) -> tuple[int, int]:
    return item[1].deck, item[1].slot


def deck_card_names(identical_jokers: bool = False) -> list[str]:
    names = [f"{r}{s}" for s in SUITS for r in RANKS]
    if identical_jokers:
        return names + ["Joker", "Joker"]
    return names + ["Black Joker", "Red Joker"]


def map_to_standard_decks(
    system: CardSystem, identical_jokers: tuple[bool, bool] = (False, False)
) -> DeckAssignment:
    """Assign a 108-card Method B inventory (n=9) to two 54-card decks.

    Deck 1 holds the encoding sets of Blocks A-F, deck 2 everything else.  The
    two jokers of a deck always go to sets that are never revealed together,
    so the assignment stays valid when a deck's jokers are identical.
    """
    if system.n != 9 or system.method != "B" or len(system) != 2 * DECK_SIZE:
        raise CardError(
            f"unsupported mapping: need the 108-card Method B system for n=9, got "
            f"{len(system)} cards (n={system.n}, method {system.method})"
        )
    labels = block_labels(9)
    deck_sets = {1: labels[:6], 2: labels[6:] + ["p", "q", "x", "y"]}
    # one joker per side of each same-deck front constraint
    joker_cards = {1: (CardId("a", 9), CardId("d", 9)), 2: (CardId("g", 9), CardId("x", 9))}
    mapping: dict[CardId, PhysicalCard] = {}
    for deck, sets in deck_sets.items():
        names = deck_card_names(identical_jokers[deck - 1])
        plain = iter(names[:52])
        jokers = iter(names[52:])
        slot = 0
        for label in sets:
            for cid in system.members(label):
                name = next(jokers) if cid in joker_cards[deck] else next(plain)
                mapping[cid] = PhysicalCard(deck, slot, name)
                slot += 1
    return DeckAssignment(mapping)


def system_from_decks(
    system: CardSystem, assignment: DeckAssignment, identical_decks: bool = False
) -> CardSystem:
    """Re-derive faces from physical cards: same name means same front.

    Identical decks share fronts and backs; different decks differ in both.
    """
    fronts: dict[tuple[int, str], int] = {}
    cards = []
    for spec in system.cards:
        pc = assignment.mapping[spec.id]
        key = (0 if identical_decks else pc.deck, pc.name)
        front = fronts.setdefault(key, len(fronts))
        back = 0 if identical_decks else pc.deck
        cards.append(replace(spec, front=front, back=back))
    return replace(system, cards=tuple(cards))
