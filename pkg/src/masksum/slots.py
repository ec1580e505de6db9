"""Slot-array data model shared by the generator and the decoders.

A summary of target length L is built by filling L slots in an arbitrary
order. A PartialSummary remembers, for every filled slot, at which step it
was filled; a completed summary is a Hypothesis carrying the full fill-order
permutation and its accumulated log-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

from .vocab import MASK_ID, TokenSeq


@dataclass(frozen=True)
class PartialSummary:
    """Fixed-length slot array; each slot is either open or (token, step).

    Step indices over filled slots always form the contiguous prefix 1..F.
    Filled slots are never overwritten; fill() returns a new instance.
    """

    length: int
    entries: tuple[tuple[int, int] | None, ...]

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if len(self.entries) != self.length:
            raise ValueError("entries do not match length")
        steps = sorted(step for e in self.entries if e is not None for step in (e[1],))
        if steps != list(range(1, len(steps) + 1)):
            raise ValueError("fill steps must form the contiguous prefix 1..F")

    @classmethod
    def empty(cls, length: int) -> "PartialSummary":
        return cls(length=length, entries=(None,) * length)

    @property
    def filled_count(self) -> int:
        return sum(1 for e in self.entries if e is not None)

    @property
    def is_complete(self) -> bool:
        return self.filled_count == self.length

    def is_open(self, slot: int) -> bool:
        return self.entries[slot] is None

    def token_at(self, slot: int) -> int | None:
        e = self.entries[slot]
        return None if e is None else e[0]

    def slot_ids(self) -> tuple[int, ...]:
        """Token ids per slot, with [MASK] standing in for open slots."""
        return tuple(MASK_ID if e is None else e[0] for e in self.entries)

    def fill(self, slot: int, token_id: int) -> "PartialSummary":
        if not 0 <= slot < self.length:
            raise ValueError(f"slot out of range: {slot}")
        if self.entries[slot] is not None:
            raise ValueError(f"slot already filled: {slot}")
        step = self.filled_count + 1
        entries = list(self.entries)
        entries[slot] = (token_id, step)
        return PartialSummary(length=self.length, entries=tuple(entries))

    def to_hypothesis(self, score: float) -> "Hypothesis":
        if not self.is_complete:
            raise ValueError("cannot finalize an incomplete summary")
        return Hypothesis(
            tokens=TokenSeq(ids=tuple(e[0] for e in self.entries)),  # type: ignore[index]
            order=tuple(e[1] for e in self.entries),  # type: ignore[index]
            score=score,
        )


@dataclass(frozen=True)
class Hypothesis:
    """A completed summary: tokens, per-slot fill steps, accumulated log-likelihood."""

    tokens: TokenSeq
    order: tuple[int, ...]
    score: float

    def __post_init__(self) -> None:
        n = len(self.tokens)
        if len(self.order) != n:
            raise ValueError("order length does not match tokens")
        if sorted(self.order) != list(range(1, n + 1)):
            raise ValueError("order must be a permutation of 1..L")
        if MASK_ID in self.tokens.ids:
            raise ValueError("completed summary contains a mask placeholder")
        if self.score > 0:
            raise ValueError("log-likelihood score must be <= 0")

    @property
    def length(self) -> int:
        return len(self.tokens)
