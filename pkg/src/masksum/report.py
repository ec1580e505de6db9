"""Per-length and per-selector score tables.

One column per target length, an average over lengths, one column per
selector, and an oracle column holding the per-instance maximum across
lengths (an upper bound on what any selector could achieve).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rouge import rouge_l, rouge_n

METRICS = ("R-1", "R-2", "R-L")
SELECTOR_COLUMNS = {"best_quality": "Quality", "best_length": "Length"}


def _score(metric: str, candidate: str, reference: str) -> float:
    if metric == "R-1":
        return rouge_n(candidate, reference, 1).f1
    if metric == "R-2":
        return rouge_n(candidate, reference, 2).f1
    return rouge_l(candidate, reference).f1


@dataclass(frozen=True)
class EvalInstance:
    instance_id: int
    source: str
    reference: str


@dataclass(frozen=True)
class ReportTable:
    lengths: tuple[int, ...]
    # (metric, column) -> mean F1; columns are "L<k>", "avg",
    # "best_quality", "best_length", "oracle".
    cells: dict[tuple[str, str], float]

    def value(self, metric: str, column: str) -> float:
        return self.cells[(metric, column)]

    def to_records(self) -> list[dict]:
        return [
            {"metric": metric, "column": column, "value": round(v, 6)}
            for (metric, column), v in sorted(self.cells.items())
        ]

    def render(self) -> str:
        columns = [f"L{n}" for n in self.lengths] + [
            "avg",
            "best_quality",
            "best_length",
            "oracle",
        ]
        headers = [str(n) for n in self.lengths] + ["Avg.", "Quality", "Length", "Oracle"]
        widths = [max(len(h), 6) for h in headers]
        lines = ["        " + "  ".join(h.rjust(w) for h, w in zip(headers, widths))]
        for metric in METRICS:
            cells = []
            for c, w in zip(columns, widths):
                v = self.cells.get((metric, c))
                cells.append(("--" if v is None else f"{100 * v:.2f}").rjust(w))
            lines.append(f"{metric:<8}" + "  ".join(cells))
        return "\n".join(lines)


def per_length_report(
    instances: list[EvalInstance],
    hypotheses: dict[int, dict[int, str]],
    selections: dict[str, dict[int, str]],
    lengths: tuple[int, ...] = tuple(range(7, 17)),
) -> ReportTable:
    """Mean R-1/R-2/R-L F1 per length column plus selector and oracle columns.

    hypotheses maps instance id -> target length -> summary text; selections
    maps selector mode -> instance id -> chosen summary text. Every instance
    must carry a hypothesis for every length and one selection per mode.
    """
    if not instances:
        raise ValueError("no instances to report on")
    for inst in instances:
        for n in lengths:
            if n not in hypotheses.get(inst.instance_id, {}):
                raise ValueError(
                    f"instance {inst.instance_id} missing hypothesis for L={n}"
                )
    for mode, chosen in selections.items():
        for inst in instances:
            if inst.instance_id not in chosen:
                raise ValueError(
                    f"instance {inst.instance_id} missing selection for mode {mode}"
                )

    cells: dict[tuple[str, str], float] = {}
    for metric in METRICS:
        per_length = {}
        oracle_scores = []
        scores_by_instance: dict[int, list[float]] = {}
        for n in lengths:
            scores = [
                _score(metric, hypotheses[inst.instance_id][n], inst.reference)
                for inst in instances
            ]
            per_length[n] = float(np.mean(scores))
            for inst, s in zip(instances, scores):
                scores_by_instance.setdefault(inst.instance_id, []).append(s)
            cells[(metric, f"L{n}")] = per_length[n]
        oracle_scores = [max(scores_by_instance[i.instance_id]) for i in instances]
        cells[(metric, "avg")] = float(np.mean(list(per_length.values())))
        cells[(metric, "oracle")] = float(np.mean(oracle_scores))
        for mode in SELECTOR_COLUMNS:
            if mode in selections:
                vals = [
                    _score(metric, selections[mode][inst.instance_id], inst.reference)
                    for inst in instances
                ]
                cells[(metric, mode)] = float(np.mean(vals))
    return ReportTable(lengths=tuple(lengths), cells=cells)
