"""Denoising objective and the training loop.

Corruption rates follow two linear schedules: the source side anneals from
10% to 0% and the summary side from 90% to 60% over the run. A token picked
for corruption becomes [MASK] 80% of the time, a random content token 10% of
the time, and stays itself otherwise; the reconstruction loss is the mean
negative log-likelihood of the original tokens at the picked positions.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch

from .model import MaskedSlotModel, ModelConfig, new_model
from .vocab import MASK_ID, NUM_SPECIALS, PAD_ID, SEP_ID, TokenSeq, Vocabulary, encode

logger = logging.getLogger(__name__)

SRC_SEGMENT = 0
TGT_SEGMENT = 1


@dataclass(frozen=True)
class ScheduleConfig:
    src_start: float = 0.10
    src_end: float = 0.00
    tgt_start: float = 0.90
    tgt_end: float = 0.60
    replace_mask: float = 0.80
    replace_random: float = 0.10
    replace_keep: float = 0.10
    total_steps: int = 0  # 0: derived from the training run length

    def __post_init__(self) -> None:
        rates = (self.src_start, self.src_end, self.tgt_start, self.tgt_end)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("mask rates must lie in [0, 1]")
        if self.src_start < self.src_end or self.tgt_start < self.tgt_end:
            raise ValueError("schedules must not increase")
        mix = self.replace_mask + self.replace_random + self.replace_keep
        if abs(mix - 1.0) > 1e-9:
            raise ValueError("replacement mix must sum to 1")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.01
    warmup_frac: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class CorruptedExample:
    source: tuple[int, ...]
    target: tuple[int, ...]
    # (segment, position, original id) per corrupted position.
    targets: tuple[tuple[int, int, int], ...]


def mask_rate_schedule(cfg: ScheduleConfig, t: int) -> tuple[float, float]:
    """Linearly interpolated (source, target) mask rates at step t.

    Steps beyond total_steps clamp to the end rates.
    """
    if t < 0:
        raise ValueError("negative step index")
    if cfg.total_steps <= 0:
        return cfg.src_end, cfg.tgt_end
    frac = min(t, cfg.total_steps) / cfg.total_steps
    return (
        cfg.src_start + (cfg.src_end - cfg.src_start) * frac,
        cfg.tgt_start + (cfg.tgt_end - cfg.tgt_start) * frac,
    )


def _corrupt_side(
    ids: tuple[int, ...],
    rate: float,
    segment: int,
    vocab_size: int,
    rng: np.random.Generator,
    mix: tuple[float, float],
) -> tuple[list[int], list[tuple[int, int, int]]]:
    out = list(ids)
    picked: list[tuple[int, int, int]] = []
    for pos, tok in enumerate(ids):
        if rng.random() >= rate:
            continue
        picked.append((segment, pos, tok))
        u = rng.random()
        if u < mix[0]:
            out[pos] = MASK_ID
        elif u < mix[0] + mix[1]:
            # Random replacement draws content tokens only; specials as
            # noise would corrupt structure rather than content.
            out[pos] = int(rng.integers(NUM_SPECIALS, vocab_size))
    return out, picked


def corrupt_for_training(
    source: TokenSeq,
    target: TokenSeq,
    rates: tuple[float, float],
    rng: np.random.Generator,
    vocab_size: int,
    mix: tuple[float, float] = (0.8, 0.1),
) -> CorruptedExample:
    """Independently corrupt each position with its side's rate.

    A picked token becomes [MASK] with probability mix[0], a random content
    token with mix[1], and stays unchanged otherwise. Reconstruction targets
    record the original ids at the picked positions only (the kept-in-place
    branch still counts as a target).
    """
    src_out, src_t = _corrupt_side(source.ids, rates[0], SRC_SEGMENT, vocab_size, rng, mix)
    tgt_out, tgt_t = _corrupt_side(target.ids, rates[1], TGT_SEGMENT, vocab_size, rng, mix)
    return CorruptedExample(
        source=tuple(src_out),
        target=tuple(tgt_out),
        targets=tuple(src_t + tgt_t),
    )


def denoise_loss(model: MaskedSlotModel, batch: list[CorruptedExample]) -> torch.Tensor:
    """Mean negative log-likelihood of originals at the corrupted positions."""
    if not batch:
        raise ValueError("empty batch")
    s_max = max(len(ex.source) for ex in batch)
    t_max = max(len(ex.target) for ex in batch)
    b = len(batch)
    src = torch.full((b, s_max), PAD_ID, dtype=torch.long)
    tgt = torch.full((b, t_max), PAD_ID, dtype=torch.long)
    key_mask = torch.zeros((b, s_max + t_max), dtype=torch.bool)
    rows, cols, originals = [], [], []
    for i, ex in enumerate(batch):
        src[i, : len(ex.source)] = torch.tensor(ex.source, dtype=torch.long)
        tgt[i, : len(ex.target)] = torch.tensor(ex.target, dtype=torch.long)
        key_mask[i, : len(ex.source)] = True
        key_mask[i, s_max : s_max + len(ex.target)] = True
        for segment, pos, orig in ex.targets:
            rows.append(i)
            cols.append(pos if segment == SRC_SEGMENT else s_max + pos)
            originals.append(orig)
    logits = model(src, tgt, key_mask)
    if not rows:
        return logits.sum() * 0.0
    picked = logits[torch.tensor(rows), torch.tensor(cols)]
    return torch.nn.functional.cross_entropy(
        picked, torch.tensor(originals, dtype=torch.long)
    )


def _extend_with_phantom_slots(
    ex: CorruptedExample, max_tgt_len: int, rng: np.random.Generator
) -> CorruptedExample:
    """Append open slots after the summary's end marker on half the examples.

    The slots are visible as [MASK] but carry no reconstruction target. They
    reproduce the greedy probe's layout, where the summary must terminate
    while unfilled positions remain, so the model learns to emit [SEP] at
    the content boundary instead of only at the last slot.
    """
    room = max_tgt_len + 1 - len(ex.target)
    if room < 1 or rng.random() >= 0.5:
        return ex
    k = int(rng.integers(1, room + 1))
    return dataclasses.replace(ex, target=ex.target + (MASK_ID,) * k)


def _encode_pairs(
    pairs: list[tuple[str, str]], vocab: Vocabulary, cfg: ModelConfig
) -> list[tuple[TokenSeq, TokenSeq]]:
    encoded = []
    for src_text, tgt_text in pairs:
        src = TokenSeq(encode(src_text, vocab).ids[: cfg.max_src_len])
        # Targets end with a visible [SEP] so the model learns where
        # summaries stop; it is corrupted like any other target token.
        tgt_ids = encode(tgt_text, vocab).ids[: cfg.max_tgt_len] + (SEP_ID,)
        encoded.append((src, TokenSeq(tgt_ids)))
    return encoded


def train(
    model_cfg: ModelConfig,
    sched: ScheduleConfig,
    train_cfg: TrainConfig,
    pairs: list[tuple[str, str]],
    vocab: Vocabulary,
) -> tuple[MaskedSlotModel, list[float]]:
    """Run schedule-driven denoising training; returns (model, per-epoch losses).

    Deterministic given (seeds, dataset, config): weight init is seeded by
    the model config, batch order and corruption draws by the train config.
    """
    if not pairs:
        raise ValueError("empty dataset")
    model = new_model(model_cfg, vocab)
    encoded = _encode_pairs(pairs, vocab, model_cfg)
    n = len(encoded)
    steps_per_epoch = math.ceil(n / train_cfg.batch_size)
    total_steps = train_cfg.epochs * steps_per_epoch
    if sched.total_steps <= 0 and total_steps > 0:
        sched = dataclasses.replace(sched, total_steps=total_steps)
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=train_cfg.lr,
        betas=train_cfg.betas,
        weight_decay=train_cfg.weight_decay,
    )
    warmup = max(1, int(round(train_cfg.warmup_frac * total_steps)))
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: min(1.0, (step + 1) / warmup)
    )
    rng = np.random.default_rng(train_cfg.seed)
    history: list[float] = []
    step = 0
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        epoch_losses: list[float] = []
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            rates = mask_rate_schedule(sched, step)
            batch = [
                corrupt_for_training(
                    encoded[i][0],
                    encoded[i][1],
                    rates,
                    rng,
                    vocab.size,
                    mix=(sched.replace_mask, sched.replace_random),
                )
                for i in idx
            ]
            batch = [
                _extend_with_phantom_slots(ex, model_cfg.max_tgt_len, rng)
                for ex in batch
            ]
            loss = denoise_loss(model, batch)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite loss at step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            if any(not torch.isfinite(p).all() for p in model.parameters()):
                raise RuntimeError(f"non-finite parameter after step {step}")
            step += 1
            model.step_count += 1
            epoch_losses.append(loss.item())
        mean_loss = float(np.mean(epoch_losses)) if epoch_losses else float("nan")
        history.append(mean_loss)
        logger.info("epoch %d/%d mean_loss=%.4f", epoch + 1, train_cfg.epochs, mean_loss)
    return model, history
