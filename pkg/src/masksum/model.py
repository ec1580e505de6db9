"""Masked denoising sequence model.

A small bidirectional transformer over [source tokens ; summary slots]. Open
slots carry the [MASK] embedding, filled slots their token embedding, and the
two segments use separate learned position tables. One forward pass yields a
token distribution for every position simultaneously, so a summary word can
condition on the source and on filled summary words at arbitrary positions.

A visible [SEP] is appended after the slot region whenever the target length
is externally imposed (training targets and fixed-length decoding); it marks
where the summary ends so the model can place a proper endpoint within the
slot budget. Everything runs in float64 on CPU: the model is tiny and exact
reproducibility of scores matters more than throughput.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .slots import PartialSummary
from .vocab import SEP_ID, TokenSeq, Vocabulary

DTYPE = torch.float64


@dataclass(frozen=True)
class ModelConfig:
    blocks: int = 2
    hidden: int = 64
    heads: int = 4
    ffn_mult: int = 4
    max_src_len: int = 48
    max_tgt_len: int = 24
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("blocks", "hidden", "heads", "ffn_mult", "max_src_len", "max_tgt_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.hidden % self.heads != 0:
            raise ValueError("hidden must be divisible by heads")


@dataclass(frozen=True)
class ProbMatrix:
    """Per-slot token distributions: rows[j] is P(token | context) for slot j."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        if self.rows.ndim != 2:
            raise ValueError("expected a 2d matrix")
        if np.any(self.rows < 0):
            raise ValueError("negative probability")
        if not np.allclose(self.rows.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("rows must sum to 1")

    @property
    def length(self) -> int:
        return self.rows.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.rows.shape[1]


class SelfAttention(nn.Module):
    def __init__(self, hidden: int, heads: int) -> None:
        super().__init__()
        self.heads = heads
        self.head_dim = hidden // heads
        self.q = nn.Linear(hidden, hidden)
        self.k = nn.Linear(hidden, hidden)
        self.v = nn.Linear(hidden, hidden)
        self.out = nn.Linear(hidden, hidden)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor | None) -> torch.Tensor:
        b, n, h = x.shape
        shape = (b, n, self.heads, self.head_dim)
        q = self.q(x).view(shape).transpose(1, 2)
        k = self.k(x).view(shape).transpose(1, 2)
        v = self.v(x).view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        y = (attn @ v).transpose(1, 2).reshape(b, n, h)
        return self.out(y)


class Block(nn.Module):
    """Pre-norm transformer block with full bidirectional attention."""

    def __init__(self, hidden: int, heads: int, ffn_mult: int) -> None:
        super().__init__()
        self.ln1 = nn.LayerNorm(hidden)
        self.attn = SelfAttention(hidden, heads)
        self.ln2 = nn.LayerNorm(hidden)
        self.ffn = nn.Sequential(
            nn.Linear(hidden, ffn_mult * hidden),
            nn.GELU(),
            nn.Linear(ffn_mult * hidden, hidden),
        )

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor | None) -> torch.Tensor:
        x = x + self.attn(self.ln1(x), key_mask)
        x = x + self.ffn(self.ln2(x))
        return x


def _init_weights(module: nn.Module) -> None:
    if isinstance(module, (nn.Linear, nn.Embedding)):
        nn.init.normal_(module.weight, mean=0.0, std=0.02)
    if isinstance(module, nn.Linear) and module.bias is not None:
        nn.init.zeros_(module.bias)


class MaskedSlotModel(nn.Module):
    """Trainable parameters plus the step counter of the training run.

    The output projection starts at zero so a fresh model predicts the
    uniform distribution everywhere and the initial loss is exactly ln|V|.
    """

    def __init__(self, config: ModelConfig, vocab_size: int) -> None:
        super().__init__()
        if vocab_size < 2:
            raise ValueError("vocabulary too small")
        self.config = config
        self.vocab_size = vocab_size
        self.step_count = 0
        torch.manual_seed(config.seed)
        self.tok_emb = nn.Embedding(vocab_size, config.hidden)
        # +1 target position for the appended [SEP] boundary slot.
        self.pos_src = nn.Embedding(config.max_src_len, config.hidden)
        self.pos_tgt = nn.Embedding(config.max_tgt_len + 1, config.hidden)
        self.blocks = nn.ModuleList(
            Block(config.hidden, config.heads, config.ffn_mult) for _ in range(config.blocks)
        )
        self.ln_f = nn.LayerNorm(config.hidden)
        self.out_proj = nn.Linear(config.hidden, vocab_size)
        self.apply(_init_weights)
        nn.init.zeros_(self.out_proj.weight)
        nn.init.zeros_(self.out_proj.bias)
        self.to(DTYPE)

    def forward(
        self,
        src: torch.Tensor,
        tgt: torch.Tensor,
        key_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Logits [B, S+T, |V|] over the concatenated source and slot regions.

        key_mask marks real (non-pad) positions of the concatenated sequence;
        omit it when the batch has no padding.
        """
        s_len, t_len = src.shape[1], tgt.shape[1]
        if s_len > self.config.max_src_len or t_len > self.config.max_tgt_len + 1:
            raise ValueError("sequence too long")
        pos_s = self.pos_src(torch.arange(s_len, device=src.device))
        pos_t = self.pos_tgt(torch.arange(t_len, device=tgt.device))
        x = torch.cat(
            [self.tok_emb(src) + pos_s, self.tok_emb(tgt) + pos_t],
            dim=1,
        )
        for block in self.blocks:
            x = block(x, key_mask)
        return self.out_proj(self.ln_f(x))

    @torch.no_grad()
    def slot_log_probs(
        self,
        source: TokenSeq,
        slot_rows: Sequence[Sequence[int]],
        append_sep: bool = True,
    ) -> torch.Tensor:
        """Log token distributions [B, L, |V|] for a batch of slot fillings.

        All rows condition on the same source. With append_sep a visible
        [SEP] follows the slot region (fixed-length layout, matching how
        training targets are terminated); its row is not returned.
        """
        if len(source) > self.config.max_src_len:
            raise ValueError("sequence too long")
        rows = [tuple(r) + ((SEP_ID,) if append_sep else ()) for r in slot_rows]
        src = torch.tensor([source.ids] * len(rows), dtype=torch.long)
        tgt = torch.tensor(rows, dtype=torch.long)
        logits = self.forward(src, tgt)[:, len(source):, :]
        if append_sep:
            logits = logits[:, :-1, :]
        return torch.log_softmax(logits, dim=-1)


def predict_all_positions(
    model: MaskedSlotModel, source: TokenSeq, partial: PartialSummary
) -> ProbMatrix:
    """One distribution per summary slot, filled slots included.

    Pure in (parameters, inputs): identical calls return identical matrices.
    Conditioning is on the source plus the set of filled slots; the order in
    which they were filled does not enter the forward pass.
    """
    if partial.length > model.config.max_tgt_len:
        raise ValueError("sequence too long")
    log_probs = model.slot_log_probs(source, [partial.slot_ids()])
    return ProbMatrix(rows=log_probs[0].exp().numpy())


def new_model(config: ModelConfig, vocab: Vocabulary | int) -> MaskedSlotModel:
    size = vocab if isinstance(vocab, int) else vocab.size
    return MaskedSlotModel(config, size)
