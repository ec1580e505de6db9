"""Summary selectors: overall-quality classifier and length-based scorers.

The quality classifier encodes source and summary separately through a small
shared transformer trunk, mean-pools each into a d-vector, and feeds the
combination [h_x ; h_y ; |h_x - h_y| ; h_x * h_y] to a one-hidden-layer head
that predicts whether the summary is admissible. The length scorers are
closed-form: log-likelihood divided by length^p, or log-likelihood plus a
per-word reward that stops accruing at the predicted length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .model import DTYPE, Block, _init_weights
from .slots import Hypothesis
from .vocab import PAD_ID, Vocabulary, decode_tokens, encode

logger = logging.getLogger(__name__)

MODES = ("best_quality", "best_length", "length_norm", "average")

# Keep classifier logits away from sigmoid saturation so reported
# probabilities stay strictly inside (0, 1).
_LOGIT_CLAMP = 30.0


@dataclass(frozen=True)
class SelectorConfig:
    hidden: int = 64
    blocks: int = 1
    heads: int = 4
    ffn_mult: int = 4
    max_len: int = 48
    epochs: int = 3
    batch_size: int = 64
    lr: float = 1e-3
    weight_decay: float = 0.01
    holdout_frac: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class LengthRewardConfig:
    reward: float = 2.0
    norm_exponent: float = 1.0
    predicted_length: int = 0

    def __post_init__(self) -> None:
        if self.reward < 0 or self.norm_exponent < 0 or self.predicted_length < 0:
            raise ValueError("reward, exponent and predicted length must be >= 0")


@dataclass(frozen=True)
class SelectorFeatures:
    """Pooled source/summary vectors and their 4d combination."""

    h_x: np.ndarray
    h_y: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        d = self.h_x.shape[0]
        if self.h_y.shape != (d,) or self.h.shape != (4 * d,):
            raise ValueError("combination vector must have 4d entries")


def combine_features(h_x: np.ndarray, h_y: np.ndarray) -> SelectorFeatures:
    """[h_x ; h_y ; elementwise |h_x - h_y| ; elementwise h_x * h_y]."""
    h = np.concatenate([h_x, h_y, np.abs(h_x - h_y), h_x * h_y])
    return SelectorFeatures(h_x=h_x, h_y=h_y, h=h)


class QualityClassifier(nn.Module):
    """Shared encoder trunk plus a feed-forward head emitting one logit."""

    def __init__(self, config: SelectorConfig, vocab_size: int) -> None:
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        torch.manual_seed(config.seed)
        self.tok_emb = nn.Embedding(vocab_size, config.hidden)
        self.pos_emb = nn.Embedding(config.max_len, config.hidden)
        self.blocks = nn.ModuleList(
            Block(config.hidden, config.heads, config.ffn_mult)
            for _ in range(config.blocks)
        )
        self.ln_f = nn.LayerNorm(config.hidden)
        self.head = nn.Sequential(
            nn.Linear(4 * config.hidden, config.hidden),
            nn.GELU(),
            nn.Linear(config.hidden, 1),
        )
        self.apply(_init_weights)
        self.to(DTYPE)

    def pooled(self, ids: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
        """Mean of final-layer vectors over real (non-pad) positions."""
        pos = self.pos_emb(torch.arange(ids.shape[1], device=ids.device))
        x = self.tok_emb(ids) + pos
        for block in self.blocks:
            x = block(x, real)
        x = self.ln_f(x)
        weights = real.to(x.dtype)
        return (x * weights[:, :, None]).sum(dim=1) / weights.sum(dim=1, keepdim=True)

    def forward(
        self,
        src_ids: torch.Tensor,
        src_real: torch.Tensor,
        sum_ids: torch.Tensor,
        sum_real: torch.Tensor,
    ) -> torch.Tensor:
        h_x = self.pooled(src_ids, src_real)
        h_y = self.pooled(sum_ids, sum_real)
        h = torch.cat([h_x, h_y, torch.abs(h_x - h_y), h_x * h_y], dim=1)
        return self.head(h).squeeze(1)


def _pad_batch(
    seqs: list[tuple[int, ...]], max_len: int
) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(s) for s in seqs)
    ids = torch.full((len(seqs), width), PAD_ID, dtype=torch.long)
    real = torch.zeros((len(seqs), width), dtype=torch.bool)
    for i, seq in enumerate(seqs):
        clipped = seq[:max_len]
        ids[i, : len(clipped)] = torch.tensor(clipped, dtype=torch.long)
        real[i, : len(clipped)] = True
    return ids, real


def _encode_text(text: str, vocab: Vocabulary, max_len: int) -> tuple[int, ...]:
    if not text.strip():
        raise ValueError("empty text")
    return encode(text, vocab).ids[:max_len]


def encode_pair(
    clf: QualityClassifier, vocab: Vocabulary, source: str, summary: str
) -> SelectorFeatures:
    """Pooled encoder vectors for one (source, summary) pair."""
    cfg = clf.config
    with torch.no_grad():
        vecs = []
        for text in (source, summary):
            ids, real = _pad_batch([_encode_text(text, vocab, cfg.max_len)], cfg.max_len)
            vecs.append(clf.pooled(ids, real)[0].numpy())
    return combine_features(vecs[0], vecs[1])


def predict_admissible(
    clf: QualityClassifier, vocab: Vocabulary, source: str, summary: str
) -> float:
    """Probability that the summary is admissible for the source."""
    cfg = clf.config
    with torch.no_grad():
        src_ids, src_real = _pad_batch([_encode_text(source, vocab, cfg.max_len)], cfg.max_len)
        sum_ids, sum_real = _pad_batch([_encode_text(summary, vocab, cfg.max_len)], cfg.max_len)
        logit = clf(src_ids, src_real, sum_ids, sum_real)[0]
        logit = torch.clamp(logit, -_LOGIT_CLAMP, _LOGIT_CLAMP)
        return float(torch.sigmoid(logit))


def train_quality_selector(
    instances: list,
    vocab: Vocabulary,
    config: SelectorConfig = SelectorConfig(),
) -> tuple[QualityClassifier, dict]:
    """Binary cross-entropy training; returns (classifier, holdout metrics)."""
    from .corruptions import LABEL_ADMISSIBLE

    if not instances:
        raise ValueError("empty dataset")
    labels = [1.0 if inst.label == LABEL_ADMISSIBLE else 0.0 for inst in instances]
    n_pos = int(sum(labels))
    if n_pos * 2 != len(labels):
        logger.warning(
            "unbalanced dataset: %d positives of %d instances", n_pos, len(labels)
        )
    encoded = [
        (
            _encode_text(inst.source, vocab, config.max_len),
            _encode_text(inst.summary, vocab, config.max_len),
        )
        for inst in instances
    ]
    clf = QualityClassifier(config, vocab.size)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(instances))
    n_holdout = max(1, int(len(instances) * config.holdout_frac))
    holdout, train_idx = order[:n_holdout], order[n_holdout:]
    optimizer = torch.optim.AdamW(
        clf.parameters(), lr=config.lr, weight_decay=config.weight_decay
    )
    loss_fn = nn.BCEWithLogitsLoss()
    for epoch in range(config.epochs):
        perm = train_idx[rng.permutation(len(train_idx))]
        epoch_losses = []
        for start in range(0, len(perm), config.batch_size):
            idx = perm[start : start + config.batch_size]
            logits = _batch_logits(clf, encoded, idx, config)
            target = torch.tensor([labels[i] for i in idx], dtype=DTYPE)
            loss = loss_fn(logits, target)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_losses.append(loss.item())
        logger.info(
            "selector epoch %d/%d mean_loss=%.4f",
            epoch + 1,
            config.epochs,
            float(np.mean(epoch_losses)),
        )
    correct = 0
    with torch.no_grad():
        for start in range(0, len(holdout), config.batch_size):
            idx = holdout[start : start + config.batch_size]
            logits = _batch_logits(clf, encoded, idx, config)
            predicted = (logits > 0).to(torch.float64)
            target = torch.tensor([labels[i] for i in idx], dtype=DTYPE)
            correct += int((predicted == target).sum())
    metrics = {
        "holdout_accuracy": correct / len(holdout),
        "n_holdout": int(len(holdout)),
    }
    logger.info("selector holdout accuracy %.3f", metrics["holdout_accuracy"])
    return clf, metrics


def _batch_logits(clf, encoded, idx, config) -> torch.Tensor:
    src_ids, src_real = _pad_batch([encoded[i][0] for i in idx], config.max_len)
    sum_ids, sum_real = _pad_batch([encoded[i][1] for i in idx], config.max_len)
    return clf(src_ids, src_real, sum_ids, sum_real)


def score_length_norm(score: float, length: int, exponent: float) -> float:
    """Log-likelihood rescaled by length^p."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return score / length**exponent


def score_reward(score: float, length: int, predicted_length: int, reward: float) -> float:
    """Log-likelihood plus a per-word reward capped at the predicted length."""
    return score + reward * min(length, predicted_length)


@dataclass(frozen=True)
class SelectionContext:
    vocab: Vocabulary
    source: str | None = None
    classifier: QualityClassifier | None = None
    reward: LengthRewardConfig | None = None


def select(
    hypotheses: list[Hypothesis], mode: str, ctx: SelectionContext
) -> Hypothesis | list[Hypothesis]:
    """Pick the best hypothesis under the given mode.

    Ties break toward the shorter summary, then lexicographically smaller
    text, making the choice independent of input order. "average" is a
    pass-through marker used by per-length evaluation and returns the full
    list unchanged.
    """
    if not hypotheses:
        raise ValueError("no hypotheses to select from")
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode}")
    if mode == "average":
        return list(hypotheses)

    def text(h: Hypothesis) -> str:
        return decode_tokens(h.tokens, ctx.vocab)

    if mode == "best_quality":
        if ctx.classifier is None or ctx.source is None:
            raise ValueError("best_quality needs a classifier and the source text")
        metric = {
            id(h): predict_admissible(ctx.classifier, ctx.vocab, ctx.source, text(h))
            for h in hypotheses
        }
    elif mode == "best_length":
        if ctx.reward is None:
            raise ValueError("best_length needs a reward config")
        metric = {
            id(h): score_reward(
                h.score, h.length, ctx.reward.predicted_length, ctx.reward.reward
            )
            for h in hypotheses
        }
    else:  # length_norm
        if ctx.reward is None:
            raise ValueError("length_norm needs a reward config")
        metric = {
            id(h): score_length_norm(h.score, h.length, ctx.reward.norm_exponent)
            for h in hypotheses
        }
    return min(
        hypotheses, key=lambda h: (-metric[id(h)], h.length, text(h), h.order, -h.score)
    )


def selection_score(hyp: Hypothesis, mode: str, ctx: SelectionContext) -> float:
    """The metric value select() used for this hypothesis under this mode."""
    if mode == "best_quality":
        return predict_admissible(
            ctx.classifier, ctx.vocab, ctx.source, decode_tokens(hyp.tokens, ctx.vocab)
        )
    if mode == "best_length":
        return score_reward(
            hyp.score, hyp.length, ctx.reward.predicted_length, ctx.reward.reward
        )
    if mode == "length_norm":
        return score_length_norm(hyp.score, hyp.length, ctx.reward.norm_exponent)
    return hyp.score
