#!/usr/bin/env python3
"""Regenerate the committed ROUGE golden fixture.

Builds 25 text pairs and scores them with the independent oracle in
tests/oracles.py (sorted-list n-gram intersection, recursive LCS). The
fixture pins our scorer to 4 decimal places; regenerate only if the pinned
preprocessing rules change.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import oracle_rouge_l, oracle_rouge_n  # noqa: E402

WORDS = (
    "port council budget trade talks plan review board rail grid river "
    "export grain deal accord reform patrol duty fee network project "
    "school farm tax relief flood defence cost fear delay merge approve"
).split()


def make_pairs() -> list[tuple[str, str]]:
    rng = np.random.default_rng(20240229)
    pairs = []
    for _ in range(21):
        n_ref = int(rng.integers(4, 14))
        ref = [WORDS[int(rng.integers(len(WORDS)))] for _ in range(n_ref)]
        n_cand = int(rng.integers(3, 14))
        cand = []
        for i in range(n_cand):
            if rng.random() < 0.55 and i < n_ref:
                cand.append(ref[i])
            else:
                cand.append(WORDS[int(rng.integers(len(WORDS)))])
        if rng.random() < 0.3:
            ref.append(".")
        if rng.random() < 0.3:
            cand[-1] += "."
        pairs.append((" ".join(cand), " ".join(ref)))
    pairs.append(("port council budget", "port council budget"))
    pairs.append(("rail grid", "tax relief plan"))
    pairs.append(("Trade Talks Plan .", "trade talks plan"))
    pairs.append(("one", "one two three four five six seven"))
    return pairs


def main() -> None:
    rows = []
    for candidate, reference in make_pairs():
        r1 = oracle_rouge_n(candidate, reference, 1)
        r2 = oracle_rouge_n(candidate, reference, 2)
        rl = oracle_rouge_l(candidate, reference)
        rows.append(
            {
                "candidate": candidate,
                "reference": reference,
                "r1": [round(v, 6) for v in r1],
                "r2": [round(v, 6) for v in r2],
                "rl": [round(v, 6) for v in rl],
            }
        )
    out = ROOT / "tests" / "data" / "rouge_golden.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} pairs to {out}")


if __name__ == "__main__":
    main()
