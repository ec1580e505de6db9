"""Rule-based negative sampling for the quality selector.

Each rule produces a minimally different, inadmissible variant of a reference
summary, emulating a distinct summarizer failure mode: wrong entity, flipped
polarity, truncated content, a look-alike summary from another instance, and
scrambled segment order. Rules that do not apply to a given summary return
None and the dataset builder draws another example, so the type mix stays
exact without fabricating degenerate negatives.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

LABEL_ADMISSIBLE = "admissible"
LABEL_CORRUPTED = "corrupted"

KIND_ORIGINAL = "original"
KIND_ENTITY = "entity_replacement"
KIND_NEGATION = "negation"
KIND_INCOMPLETE = "incomplete"
KIND_SEARCH_REPLACE = "search_replace"
KIND_SWAP = "swap_segments"

# Relative frequency of each negative type in a built dataset.
KIND_WEIGHTS = {
    KIND_ENTITY: 400,
    KIND_NEGATION: 400,
    KIND_INCOMPLETE: 400,
    KIND_SEARCH_REPLACE: 226,
    KIND_SWAP: 400,
}

# Auxiliary/modal toggles; scanning stops at the first token found in either
# direction, so exactly one word ever changes.
_NEGATE = {
    "is": "isn't",
    "are": "aren't",
    "was": "wasn't",
    "were": "weren't",
    "will": "won't",
    "would": "wouldn't",
    "can": "can't",
    "could": "couldn't",
    "should": "shouldn't",
    "must": "mustn't",
    "has": "hasn't",
    "have": "haven't",
    "had": "hadn't",
    "does": "doesn't",
    "do": "don't",
    "did": "didn't",
}
_UNNEGATE = {neg: bare for bare, neg in _NEGATE.items()}

MIN_SHARED_BIGRAMS = 4
MAX_INCOMPLETE_WORDS = 5


@dataclass(frozen=True)
class CorruptionInstance:
    source: str
    summary: str
    label: str
    kind: str

    def __post_init__(self) -> None:
        if not self.summary.strip():
            raise ValueError("empty summary")
        if (self.label == LABEL_ADMISSIBLE) != (self.kind == KIND_ORIGINAL):
            raise ValueError("admissible label is reserved for original summaries")


def _entity_token(token: str, position: int) -> bool:
    # Sentence-initial words are capitalized anyway; they only count as an
    # entity when capitalization goes beyond the first character (UN, IAEA).
    if position == 0:
        return any(c.isupper() for c in token[1:])
    return bool(token) and token[0].isupper()


def detect_entity_spans(summary: str) -> list[tuple[int, int]]:
    """Maximal runs of entity-looking tokens, as [start, end) word indices."""
    words = summary.split()
    spans = []
    i = 0
    while i < len(words):
        if _entity_token(words[i], i):
            j = i + 1
            while j < len(words) and _entity_token(words[j], j):
                j += 1
            spans.append((i, j))
            i = j
        else:
            i += 1
    return spans


def harvest_entity_pool(summaries: list[str]) -> list[str]:
    """Distinct entity span texts across a corpus, in sorted order."""
    pool = set()
    for summary in summaries:
        words = summary.split()
        for start, end in detect_entity_spans(summary):
            pool.add(" ".join(words[start:end]))
    return sorted(pool)


def entity_replace(
    summary: str, entity_pool: list[str], rng: np.random.Generator
) -> str | None:
    """Swap one detected entity span for a different pool entity."""
    if not entity_pool:
        raise ValueError("empty entity pool")
    spans = detect_entity_spans(summary)
    if not spans:
        return None
    words = summary.split()
    start, end = spans[int(rng.integers(len(spans)))]
    original = " ".join(words[start:end])
    candidates = [e for e in entity_pool if e != original]
    if not candidates:
        return None
    replacement = candidates[int(rng.integers(len(candidates)))]
    return " ".join(words[:start] + replacement.split() + words[end:])


def _match_case(template: str, word: str) -> str:
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def negate(summary: str) -> str | None:
    """Toggle the first auxiliary/modal: bare gains n't, contracted loses it."""
    words = summary.split()
    for i, word in enumerate(words):
        low = word.lower()
        if low in _NEGATE:
            words[i] = _match_case(word, _NEGATE[low])
            return " ".join(words)
        if low in _UNNEGATE:
            words[i] = _match_case(word, _UNNEGATE[low])
            return " ".join(words)
    return None


def truncate_incomplete(summary: str, rng: np.random.Generator) -> str | None:
    """Keep a short contiguous span that drops the opening of the summary."""
    words = summary.split()
    if len(words) <= MAX_INCOMPLETE_WORDS:
        return None
    start = int(rng.integers(1, len(words)))
    span = int(rng.integers(1, min(MAX_INCOMPLETE_WORDS, len(words) - start) + 1))
    return " ".join(words[start : start + span])


def swap_segments(summary: str) -> str | None:
    """Swap the two halves; odd lengths split after floor(n/2)."""
    words = summary.split()
    if len(words) < 2:
        return None
    cut = len(words) // 2
    return " ".join(words[cut:] + words[:cut])


def _bigrams(text: str) -> frozenset[tuple[str, str]]:
    words = text.split()
    return frozenset(zip(words, words[1:]))


class BigramIndex:
    """Inverted bigram index over the training summaries."""

    def __init__(self, summaries: list[str]) -> None:
        self.summaries = list(summaries)
        self.bigram_sets = [_bigrams(s) for s in self.summaries]
        self.postings: dict[tuple[str, str], list[int]] = {}
        for i, bigrams in enumerate(self.bigram_sets):
            for bg in bigrams:
                self.postings.setdefault(bg, []).append(i)

    def similar(self, summary_id: int, min_shared: int = MIN_SHARED_BIGRAMS) -> list[int]:
        """Ids of other summaries sharing at least min_shared distinct bigrams."""
        shared: Counter[int] = Counter()
        for bg in self.bigram_sets[summary_id]:
            for other in self.postings[bg]:
                if other != summary_id:
                    shared[other] += 1
        return sorted(i for i, c in shared.items() if c >= min_shared)


def search_replace(
    summary_id: int, index: BigramIndex, rng: np.random.Generator
) -> str | None:
    """Substitute a near-duplicate training summary for the real one."""
    candidates = index.similar(summary_id)
    if not candidates:
        return None
    return index.summaries[candidates[int(rng.integers(len(candidates)))]]


def _apportion(total: int, weights: dict[str, int]) -> dict[str, int]:
    """Largest-remainder split of total across weights; ties keep dict order."""
    denom = sum(weights.values())
    quotas = {k: total * w / denom for k, w in weights.items()}
    counts = {k: int(q) for k, q in quotas.items()}
    short = total - sum(counts.values())
    by_remainder = sorted(
        weights, key=lambda k: quotas[k] - counts[k], reverse=True
    )
    for k in by_remainder[:short]:
        counts[k] += 1
    return counts


def _apply_kind(
    kind: str,
    example_id: int,
    summary: str,
    pool: list[str],
    index: BigramIndex,
    rng: np.random.Generator,
) -> str | None:
    if kind == KIND_ENTITY:
        return entity_replace(summary, pool, rng)
    if kind == KIND_NEGATION:
        return negate(summary)
    if kind == KIND_INCOMPLETE:
        return truncate_incomplete(summary, rng)
    if kind == KIND_SEARCH_REPLACE:
        return search_replace(example_id, index, rng)
    if kind == KIND_SWAP:
        return swap_segments(summary)
    raise ValueError(f"unknown corruption kind: {kind}")


def build_selector_dataset(
    train_split: list[tuple[str, str]],
    total_n: int,
    rng: np.random.Generator,
    attempts_per_instance: int = 50,
) -> list[CorruptionInstance]:
    """Balanced positives/negatives with the configured negative type mix.

    Negatives that come out equal to their reference (identical-twin
    summaries, for instance) are rejected and redrawn. A type that keeps
    failing has its remaining quota reassigned to the other types.
    """
    if not train_split:
        raise ValueError("empty training split")
    if total_n % 2 != 0:
        raise ValueError("total_n must be even")
    n_half = total_n // 2
    summaries = [summary for _, summary in train_split]
    pool = harvest_entity_pool(summaries)
    index = BigramIndex(summaries)

    instances = [
        CorruptionInstance(
            source=train_split[i][0],
            summary=train_split[i][1],
            label=LABEL_ADMISSIBLE,
            kind=KIND_ORIGINAL,
        )
        for i in (int(rng.integers(len(train_split))) for _ in range(n_half))
    ]

    quotas = _apportion(n_half, KIND_WEIGHTS)
    exhausted: set[str] = set()
    while True:
        for kind in KIND_WEIGHTS:
            need = quotas.get(kind, 0)
            if need == 0:
                continue
            budget = need * attempts_per_instance
            made = 0
            while made < need and budget > 0:
                budget -= 1
                i = int(rng.integers(len(train_split)))
                src, summary = train_split[i]
                if kind == KIND_ENTITY and not pool:
                    break
                corrupted = _apply_kind(kind, i, summary, pool, index, rng)
                if corrupted is None or corrupted == summary:
                    continue
                instances.append(
                    CorruptionInstance(
                        source=src,
                        summary=corrupted,
                        label=LABEL_CORRUPTED,
                        kind=kind,
                    )
                )
                made += 1
            quotas[kind] = need - made
            if quotas[kind] > 0:
                exhausted.add(kind)
        shortfall = sum(quotas.values())
        if shortfall == 0:
            break
        viable = {k: w for k, w in KIND_WEIGHTS.items() if k not in exhausted}
        if not viable:
            raise RuntimeError("no corruption type applies to this corpus")
        logger.warning(
            "reassigning %d negatives away from %s", shortfall, sorted(exhausted)
        )
        quotas = _apportion(shortfall, viable)

    rng.shuffle(instances)  # type: ignore[arg-type]
    return instances


def save_dataset(instances: list[CorruptionInstance], path) -> None:
    """One record per line: label(1 admissible / 0 corrupted), kind, source, summary."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            label = 1 if inst.label == LABEL_ADMISSIBLE else 0
            fh.write(f"{label}\t{inst.kind}\t{inst.source}\t{inst.summary}\n")


def load_dataset(path) -> list[CorruptionInstance]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields")
            label_bit, kind, source, summary = parts
            instances.append(
                CorruptionInstance(
                    source=source,
                    summary=summary,
                    label=LABEL_ADMISSIBLE if label_bit == "1" else LABEL_CORRUPTED,
                    kind=kind,
                )
            )
    return instances
