"""Six-label temporal relation algebra.

Labels are interval relations decided by strict endpoint order.  Anything the
six labels cannot express (overlap, meets, shared endpoints) is ``vague``.
The composition table is not written by hand: it is enumerated from concrete
interval triples on a small integer grid.

Label sets are 6-bit masks.  :class:`LabelSet` wraps a mask for the public
API; the solver and propagation code work on raw ``int`` masks through
:data:`INVERSE_MASK` and :meth:`CompositionTable.set_composition`.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator


class RelLabel(enum.IntEnum):
    """A temporal relation between two events, in fixed tie-break order."""

    BEFORE = 0
    AFTER = 1
    INCLUDES = 2
    IS_INCLUDED = 3
    SIMULTANEOUS = 4
    VAGUE = 5

    @property
    def bit(self) -> int:
        return 1 << self.value

    @property
    def definite(self) -> bool:
        return self is not RelLabel.VAGUE

    @classmethod
    def parse(cls, name: str) -> "RelLabel":
        try:
            return _BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown relation label {name!r}") from None

    def __str__(self) -> str:
        return self.name.lower()


LABELS: tuple[RelLabel, ...] = tuple(RelLabel)
LABEL_NAMES: tuple[str, ...] = tuple(str(r) for r in LABELS)
_BY_NAME = {str(r): r for r in LABELS}

FULL_MASK = (1 << len(LABELS)) - 1
DEFINITE_MASK = FULL_MASK & ~RelLabel.VAGUE.bit

_INVERSE = {
    RelLabel.BEFORE: RelLabel.AFTER,
    RelLabel.AFTER: RelLabel.BEFORE,
    RelLabel.INCLUDES: RelLabel.IS_INCLUDED,
    RelLabel.IS_INCLUDED: RelLabel.INCLUDES,
    RelLabel.SIMULTANEOUS: RelLabel.SIMULTANEOUS,
    RelLabel.VAGUE: RelLabel.VAGUE,
}


def inverse(r: RelLabel) -> RelLabel:
    """Relation read in the opposite direction."""
    return _INVERSE[r]


def mask_labels(mask: int) -> list[RelLabel]:
    return [r for r in LABELS if mask >> r.value & 1]


def _inverse_mask(mask: int) -> int:
    out = 0
    for r in mask_labels(mask):
        out |= inverse(r).bit
    return out


INVERSE_MASK: tuple[int, ...] = tuple(_inverse_mask(m) for m in range(FULL_MASK + 1))


@dataclass(frozen=True)
class LabelSet:
    """Immutable set of relation labels backed by a bitmask."""

    mask: int = 0

    @classmethod
    def of(cls, labels: Iterable[RelLabel]) -> "LabelSet":
        m = 0
        for r in labels:
            m |= RelLabel(r).bit
        return cls(m)

    @classmethod
    def full(cls) -> "LabelSet":
        return cls(FULL_MASK)

    def __contains__(self, r: object) -> bool:
        return isinstance(r, int) and 0 <= r < len(LABELS) and bool(self.mask >> int(r) & 1)

    def __iter__(self) -> Iterator[RelLabel]:
        return iter(mask_labels(self.mask))

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def __or__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask | other.mask)

    def __and__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask & other.mask)

    def inverse(self) -> "LabelSet":
        return LabelSet(INVERSE_MASK[self.mask])

    def __str__(self) -> str:
        return "{" + ", ".join(str(r) for r in self) + "}"

    def __repr__(self) -> str:
        return f"LabelSet({self})"


@dataclass(frozen=True, order=True)
class Interval:
    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"degenerate interval [{self.start}, {self.end}]")


def oracle_relation(a: Interval, b: Interval) -> RelLabel:
    """Relation of ``a`` to ``b`` under strict endpoint semantics."""
    if a.end < b.start:
        return RelLabel.BEFORE
    if b.end < a.start:
        return RelLabel.AFTER
    if a.start < b.start and b.end < a.end:
        return RelLabel.INCLUDES
    if b.start < a.start and a.end < b.end:
        return RelLabel.IS_INCLUDED
    if a.start == b.start and a.end == b.end:
        return RelLabel.SIMULTANEOUS
    return RelLabel.VAGUE


class CompositionTable:
    """Total map ``(r1, r2) -> LabelSet``; read-only once built."""

    __slots__ = ("_entries",)

    def __init__(self, entries: dict[tuple[RelLabel, RelLabel], LabelSet]):
        missing = [k for k in itertools.product(LABELS, LABELS) if k not in entries]
        if missing:
            raise ValueError(f"composition table missing {len(missing)} entries")
        self._entries = tuple(
            tuple(entries[r1, r2].mask for r2 in LABELS) for r1 in LABELS
        )

    def compose(self, r1: RelLabel, r2: RelLabel) -> LabelSet:
        return LabelSet(self._entries[r1][r2])

    def compose_mask(self, r1: int, r2: int) -> int:
        return self._entries[r1][r2]

    def rows(self) -> tuple[tuple[int, ...], ...]:
        return self._entries

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CompositionTable) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def set_composition(self, m1: int, m2: int) -> int:
        """Union of compositions over two label masks."""
        return _set_compose(self._entries)[m1][m2]

    def set_rows(self) -> tuple[tuple[int, ...], ...]:
        """64x64 mask table behind :meth:`set_composition`."""
        return _set_compose(self._entries)

    def render(self) -> str:
        """Text matrix: rows are r1, columns r2."""
        cells = [[str(self.compose(r1, r2)) for r2 in LABELS] for r1 in LABELS]
        width = max(max(len(c) for row in cells for c in row), max(map(len, LABEL_NAMES)))
        head = " " * 14 + " | ".join(n.ljust(width) for n in LABEL_NAMES)
        lines = [head, "-" * len(head)]
        for r1, row in zip(LABEL_NAMES, cells):
            lines.append(r1.ljust(14) + " | ".join(c.ljust(width) for c in row))
        return "\n".join(line.rstrip() for line in lines)


@lru_cache(maxsize=8)
def _set_compose(entries: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
    n = FULL_MASK + 1
    single = [[0] * n for _ in LABELS]
    for r1 in LABELS:
        row = single[r1]
        for m2 in range(1, n):
            acc = 0
            for r2 in mask_labels(m2):
                acc |= entries[r1][r2]
            row[m2] = acc
    out = []
    for m1 in range(n):
        row = [0] * n
        members = mask_labels(m1)
        for m2 in range(n):
            acc = 0
            for r1 in members:
                acc |= single[r1][m2]
            row[m2] = acc
        out.append(tuple(row))
    return tuple(out)


def build_composition_table(grid_max: int = 8) -> CompositionTable:
    """Enumerate interval triples on ``[0, grid_max]`` to derive composition.

    Pairs with a vague input are set to the full set: vague constrains nothing
    on its own.
    """
    if grid_max < 8:
        raise ValueError("grid_max must be >= 8")
    intervals = [Interval(s, e) for s in range(grid_max + 1) for e in range(s + 1, grid_max + 1)]
    # relation of every interval pair, indexed by position
    rel = [[int(oracle_relation(a, b)) for b in intervals] for a in intervals]
    n = len(intervals)
    seen = [[0] * len(LABELS) for _ in LABELS]
    for ia in range(n):
        ra = rel[ia]
        for ib in range(n):
            r1 = ra[ib]
            if r1 == RelLabel.VAGUE:
                continue
            rb = rel[ib]
            acc = seen[r1]
            for ic in range(n):
                r2 = rb[ic]
                if r2 != RelLabel.VAGUE:
                    acc[r2] |= 1 << ra[ic]
    entries = {}
    for r1, r2 in itertools.product(LABELS, LABELS):
        if r1.definite and r2.definite:
            entries[r1, r2] = LabelSet(seen[r1][r2])
        else:
            entries[r1, r2] = LabelSet.full()
    return CompositionTable(entries)


@lru_cache(maxsize=1)
def default_table() -> CompositionTable:
    return build_composition_table(8)
