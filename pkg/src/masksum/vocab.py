"""Whitespace vocabulary with the four reserved control tokens.

Ids 0..3 are pinned to [MASK], [SEP], [PAD], [UNK] in that order; content
tokens follow, sorted by descending corpus frequency with lexicographic
tie-breaking, so identical corpora always produce identical id assignments.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

MASK_TOKEN = "[MASK]"
SEP_TOKEN = "[SEP]"
PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
SPECIAL_TOKENS = (MASK_TOKEN, SEP_TOKEN, PAD_TOKEN, UNK_TOKEN)

MASK_ID = 0
SEP_ID = 1
PAD_ID = 2
UNK_ID = 3
NUM_SPECIALS = 4


@dataclass(frozen=True)
class TokenSeq:
    """An immutable sequence of token ids."""

    ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(i < 0 for i in self.ids):
            raise ValueError("negative token id")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)


@dataclass(frozen=True)
class Vocabulary:
    """Bijective token <-> id mapping. Specials occupy ids 0..3."""

    tokens: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.tokens[:NUM_SPECIALS] != SPECIAL_TOKENS:
            raise ValueError("first four tokens must be the reserved specials")
        if len(self.tokens) < NUM_SPECIALS + 1:
            raise ValueError("vocabulary needs at least one content token")
        index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise ValueError(f"id out of range: {token_id}")
        return self.tokens[token_id]

    @property
    def content_ids(self) -> range:
        return range(NUM_SPECIALS, len(self.tokens))

    def save(self, path: str | Path) -> None:
        # One token per line; the line number is the id.
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tokens=tuple(lines))


def build_vocab(corpus: list[str], min_count: int = 1) -> Vocabulary:
    """Collect whitespace tokens with frequency >= min_count.

    Ordering is deterministic: specials first, then content tokens by
    descending frequency, ties broken lexicographically.
    """
    counts: Counter[str] = Counter()
    for line in corpus:
        counts.update(line.split())
    if not counts:
        raise ValueError("empty corpus")
    kept = [tok for tok, c in counts.items() if c >= min_count and tok not in SPECIAL_TOKENS]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    return Vocabulary(tokens=SPECIAL_TOKENS + tuple(kept))


def encode(text: str, vocab: Vocabulary) -> TokenSeq:
    """Map whitespace tokens to ids; unknown tokens become [UNK]."""
    return TokenSeq(ids=tuple(vocab.id_of(tok) for tok in text.split()))


def decode_tokens(seq: TokenSeq, vocab: Vocabulary) -> str:
    """Render ids as space-joined tokens. Specials render as their names."""
    return " ".join(vocab.token_of(i) for i in seq.ids)
