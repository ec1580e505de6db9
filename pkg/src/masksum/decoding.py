"""Position-aware beam search and the greedy left-to-right length probe.

The beam differs from conventional beam search in that a state is a partial
*slot assignment* rather than a prefix: every state carries a binary mask
recording which of the L positions are taken, and each round extends a state
by its best (token, open position) pairs anywhere in the summary. All L
positions are filled after exactly L rounds, so every returned hypothesis has
the requested length.

Scores are natural-log probabilities accumulated per fill; rows of taken
positions contribute -inf and can never be selected again. Exact ties are
broken by lower position index, then lower token id, then parent beam rank,
which makes decoding fully deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .model import MaskedSlotModel, predict_all_positions
from .slots import Hypothesis, PartialSummary
from .vocab import MASK_ID, PAD_ID, SEP_ID, UNK_ID, TokenSeq

logger = logging.getLogger(__name__)

# Specials are never candidates when the length is externally imposed:
# [SEP] would end the summary early, the rest are placeholders.
EXCLUDED_CANDIDATES = (MASK_ID, SEP_ID, PAD_ID, UNK_ID)


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = 20
    length: int = 10

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam size must be >= 1")
        if self.length < 1:
            raise ValueError("summary length must be >= 1")


@dataclass(frozen=True)
class PositionMask:
    """Row-uniform binary matrix over (position, token): 1 = still available."""

    open_slots: tuple[bool, ...]
    vocab_size: int

    @classmethod
    def all_open(cls, length: int, vocab_size: int) -> "PositionMask":
        return cls(open_slots=(True,) * length, vocab_size=vocab_size)

    def take(self, slot: int) -> "PositionMask":
        if not self.open_slots[slot]:
            raise ValueError(f"position already taken: {slot}")
        flags = list(self.open_slots)
        flags[slot] = False
        return PositionMask(open_slots=tuple(flags), vocab_size=self.vocab_size)

    @property
    def open_count(self) -> int:
        return sum(self.open_slots)

    def to_matrix(self) -> np.ndarray:
        rows = np.array(self.open_slots, dtype=np.uint8)
        return np.repeat(rows[:, None], self.vocab_size, axis=1)


@dataclass(frozen=True)
class BeamState:
    score: float
    partial: PartialSummary
    mask: PositionMask

    def __post_init__(self) -> None:
        taken = tuple(not o for o in self.mask.open_slots)
        filled = tuple(not self.partial.is_open(i) for i in range(self.partial.length))
        if taken != filled:
            raise ValueError("mask disagrees with filled slots")


def _expand_state(
    state: BeamState,
    log_rows: torch.Tensor,
    k: int,
) -> list[tuple[float, int, int]]:
    """Top-k finite (score, position, token) extensions of one state."""
    masked = log_rows.clone()
    for slot, open_ in enumerate(state.mask.open_slots):
        if not open_:
            masked[slot, :] = float("-inf")
    masked[:, list(EXCLUDED_CANDIDATES)] = float("-inf")
    flat = masked.reshape(-1)
    # Stable sort: among equal scores the smaller flat index wins, i.e.
    # lower position first, then lower token id.
    order = torch.argsort(flat, descending=True, stable=True)
    vocab = log_rows.shape[1]
    out = []
    for idx in order[: min(k, flat.shape[0])].tolist():
        val = float(flat[idx])
        if val == float("-inf"):
            break
        out.append((state.score + val, idx // vocab, idx % vocab))
    return out


def pos_aware_beam(
    model: MaskedSlotModel, source: TokenSeq, cfg: BeamConfig
) -> Hypothesis:
    """Decode the best summary of exactly cfg.length tokens.

    Runs cfg.length rounds; each round scores all open (token, position)
    pairs for every beam state in one batched model call, keeps the
    beam_size best extensions overall, and finally returns the top state.
    """
    if cfg.length > model.config.max_tgt_len:
        raise ValueError("sequence too long")
    beam = [
        BeamState(
            score=0.0,
            partial=PartialSummary.empty(cfg.length),
            mask=PositionMask.all_open(cfg.length, model.vocab_size),
        )
    ]
    for _round in range(cfg.length):
        log_probs = model.slot_log_probs(source, [s.partial.slot_ids() for s in beam])
        candidates: list[tuple[float, int, int, int]] = []
        for parent, state in enumerate(beam):
            for score, slot, token in _expand_state(state, log_probs[parent], cfg.beam_size):
                candidates.append((score, slot, token, parent))
        if not candidates:
            raise RuntimeError("no admissible extension; vocabulary too small")
        candidates.sort(key=lambda c: (-c[0], c[1], c[2], c[3]))
        beam = [
            BeamState(
                score=score,
                partial=beam[parent].partial.fill(slot, token),
                mask=beam[parent].mask.take(slot),
            )
            for score, slot, token, parent in candidates[: cfg.beam_size]
        ]
    best = beam[0]
    return best.partial.to_hypothesis(score=min(best.score, 0.0))


def greedy_left_to_right(
    model: MaskedSlotModel, source: TokenSeq, max_len: int
) -> tuple[TokenSeq, int]:
    """Fill slots strictly left to right until [SEP] appears.

    Starts from max_len open slots with no externally imposed length, takes
    the argmax token for the leftmost open slot each step, and returns the
    tokens emitted before [SEP] along with their count. A run that never
    emits [SEP] truncates at max_len.
    """
    if max_len > model.config.max_tgt_len:
        raise ValueError("sequence too long")
    slots: list[int] = [MASK_ID] * max_len
    emitted: list[int] = []
    for pos in range(max_len):
        log_probs = model.slot_log_probs(source, [tuple(slots)], append_sep=False)
        row = log_probs[0, pos, :].clone()
        row[MASK_ID] = float("-inf")
        row[PAD_ID] = float("-inf")
        row[UNK_ID] = float("-inf")
        token = int(torch.argmax(row))
        if token == SEP_ID:
            return TokenSeq(tuple(emitted)), len(emitted)
        slots[pos] = token
        emitted.append(token)
    logger.info("greedy decode truncated at max_len=%d", max_len)
    return TokenSeq(tuple(emitted)), len(emitted)


def over_generate(
    model: MaskedSlotModel,
    source: TokenSeq,
    lengths: range | list[int] = range(7, 17),
    beam_size: int = 20,
) -> list[Hypothesis]:
    """One exact-length hypothesis per requested length, ascending."""
    lens = sorted(lengths)
    if not lens:
        raise ValueError("empty length range")
    return [
        pos_aware_beam(model, source, BeamConfig(beam_size=beam_size, length=n))
        for n in lens
    ]


def replay_score(model: MaskedSlotModel, source: TokenSeq, hyp: Hypothesis) -> float:
    """Re-accumulate a hypothesis score by replaying its recorded fill order."""
    partial = PartialSummary.empty(hyp.length)
    slot_of_step = {step: slot for slot, step in enumerate(hyp.order)}
    total = 0.0
    for step in range(1, hyp.length + 1):
        slot = slot_of_step[step]
        probs = predict_all_positions(model, source, partial)
        total += float(np.log(probs.rows[slot, hyp.tokens.ids[slot]]))
        partial = partial.fill(slot, hyp.tokens.ids[slot])
    return total
