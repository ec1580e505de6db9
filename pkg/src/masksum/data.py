"""TSV ingestion and the synthetic headline corpus.

The synthetic generator pairs a filler-padded source sentence with a
keyword-core reference. The core (subject, verb group, object, optional
trailers, terminal period) appears verbatim and in order inside the source,
so the summarization task is a learnable compression: drop the filler, keep
the core. Reference lengths span 7..16 tokens with a median near 12.

Cores reuse a modest pool of phrases on purpose: repeated subject/verb/object
combinations give the bigram-overlap corruption enough near-duplicate pairs
to draw from, subjects and some objects carry capitalized names for the
entity corruption, and a share of verb groups includes an auxiliary so the
negation corruption applies.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

SUBJECTS = [
    ("Arden", "Council"),
    ("Halvik", "Port", "Authority"),
    ("Crestline", "Bank"),
    ("UN",),
    ("Veltria",),
    ("Norfield", "Rail"),
    ("Apex", "Energy"),
    ("Mersa", "Airlines"),
    ("Quillon", "Ministry"),
    ("Tarbor", "Exchange"),
    ("Ostend", "Health", "Board"),
    ("Pellam", "Water"),
    ("Sorvale", "Mining"),
    ("Dunmore", "Assembly"),
    ("Kivela", "Shipping"),
    ("Branford", "Grid"),
]

PLAIN_VERBS = [
    "approves",
    "extends",
    "rejects",
    "suspends",
    "expands",
    "reviews",
    "delays",
    "confirms",
    "launches",
    "freezes",
]

# (auxiliary, base) pairs; the auxiliary feeds the negation corruption.
AUX_VERBS = [
    ("will", "approve"),
    ("will", "extend"),
    ("has", "approved"),
    ("has", "rejected"),
    ("is", "expanding"),
    ("is", "reviewing"),
    ("must", "suspend"),
    ("could", "delay"),
]

OBJECTS = [
    ("new", "trade", "rules"),
    ("the", "merger", "plan"),
    ("funding", "for", "rural", "schools"),
    ("a", "deal", "with", "Norvia"),
    ("the", "Kestrel", "project"),
    ("port", "fees"),
    ("its", "freight", "network"),
    ("talks", "with", "Davenport"),
    ("the", "budget", "deal"),
    ("a", "ban", "on", "exports"),
    ("grain", "shipments"),
    ("the", "pension", "reform"),
    ("coastal", "patrol", "duties"),
    ("the", "Harlow", "accord"),
    ("its", "flood", "defences"),
    ("tax", "relief", "for", "farmers"),
]

TAIL_CHUNKS = [
    ("today",),
    ("nationwide",),
    ("this", "week"),
    ("next", "year"),
    ("after", "lengthy", "talks"),
    ("despite", "budget", "concerns"),
    ("in", "the", "northern", "region"),
    ("under", "a", "revised", "timetable"),
    ("for", "two", "more", "years"),
    ("amid", "rising", "costs"),
    ("over", "safety", "fears"),
    ("to", "ease", "congestion"),
]

OPENERS = [
    ("officials", "said", "that"),
    ("sources", "confirmed", "that"),
    ("reports", "indicate", "that"),
    ("a", "spokesman", "said"),
    ("local", "media", "reported", "that"),
]

MIDDLES = [
    (),
    ("on", "monday",),
    ("on", "friday",),
    ("this", "quarter",),
    ("in", "a", "statement",),
]

CLOSERS = [
    (",", "analysts", "noted"),
    (",", "drawing", "mixed", "reactions"),
    (",", "a", "person", "close", "to", "the", "matter", "said"),
    (",", "according", "to", "a", "briefing"),
    (",", "pending", "final", "review"),
]

# Reference length distribution over 7..16; peaked so the median lands
# around 12.
LENGTH_WEIGHTS = {
    7: 4,
    8: 6,
    9: 8,
    10: 10,
    11: 12,
    12: 12,
    13: 10,
    14: 8,
    15: 6,
    16: 4,
}


def _pick(rng: np.random.Generator, options: list) -> tuple:
    return options[int(rng.integers(len(options)))]


def _sample_length(rng: np.random.Generator) -> int:
    lengths = sorted(LENGTH_WEIGHTS)
    weights = np.array([LENGTH_WEIGHTS[n] for n in lengths], dtype=float)
    return int(rng.choice(lengths, p=weights / weights.sum()))


def make_pair(rng: np.random.Generator) -> tuple[str, str]:
    subject = _pick(rng, SUBJECTS)
    verb = _pick(rng, AUX_VERBS) if rng.random() < 0.4 else (_pick(rng, PLAIN_VERBS),)
    obj = _pick(rng, OBJECTS)
    base = len(subject) + len(verb) + len(obj) + 1
    target = max(_sample_length(rng), base, 7)
    tail: list[str] = []
    remaining = target - base
    while remaining > 0:
        fitting = [c for c in TAIL_CHUNKS if len(c) <= remaining]
        chunk = _pick(rng, fitting)
        tail.extend(chunk)
        remaining -= len(chunk)
    core = list(subject) + list(verb) + list(obj) + tail
    reference = " ".join(core + ["."])
    opener = _pick(rng, OPENERS)
    middle = _pick(rng, MIDDLES)
    closer = _pick(rng, CLOSERS)
    source_words = (
        list(opener)
        + list(subject)
        + list(middle)
        + list(verb)
        + list(obj)
        + tail
        + list(closer)
        + ["."]
    )
    return " ".join(source_words), reference


def generate_pairs(n: int, seed: int) -> list[tuple[str, str]]:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return [make_pair(rng) for _ in range(n)]


def write_tsv(pairs: list[tuple[str, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for source, summary in pairs:
            fh.write(f"{source}\t{summary}\n")


def synth_corpus(n: int, seed: int, path: str | Path) -> list[tuple[str, str]]:
    """Generate n deterministic instances and write them as TSV."""
    pairs = generate_pairs(n, seed)
    write_tsv(pairs, path)
    return pairs


def load_tsv(path: str | Path) -> list[tuple[str, str]]:
    """Read (source, summary) pairs; one tab-separated instance per line.

    CRLF endings are normalized before parsing. Line numbers double as
    instance ids downstream, so malformed lines are rejected by number.
    """
    text = Path(path).read_text(encoding="utf-8").replace("\r\n", "\n")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ValueError("empty file")
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 2 fields")
        pairs.append((parts[0], parts[1]))
    return pairs
