"""Stage orchestration: train, over-generate, corrupt, select, evaluate.

Stages communicate through files under the run's output directory, so each
one is independently re-runnable and a finished run is fully described by
its manifest: a config snapshot plus content hashes of every input and
artifact. Manifests contain no timestamps or absolute paths; two runs with
the same inputs, config and seed produce byte-identical manifests.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import checkpoint
from .corruptions import build_selector_dataset, load_dataset, save_dataset
from .data import load_tsv, synth_corpus
from .decoding import greedy_left_to_right, over_generate
from .model import ModelConfig
from .report import EvalInstance, per_length_report
from .selector import (
    LengthRewardConfig,
    SelectionContext,
    SelectorConfig,
    select,
    selection_score,
    train_quality_selector,
)
from .slots import Hypothesis
from .training import ScheduleConfig, TrainConfig, corrupt_for_training, denoise_loss, train
from .vocab import TokenSeq, Vocabulary, build_vocab, decode_tokens, encode

logger = logging.getLogger(__name__)

STAGES = (
    "train-generator",
    "generate",
    "build-corruptions",
    "train-selector",
    "select",
    "evaluate",
)

SELECT_MODES = ("best_quality", "best_length", "length_norm", "average")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    train_tsv: str = "data/train.tsv"
    valid_tsv: str = "data/valid.tsv"
    test_tsv: str = "data/test.tsv"
    out_dir: str = "out"
    model: ModelConfig = field(default_factory=lambda: ModelConfig(max_src_len=36, max_tgt_len=20))
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    beam_size: int = 20
    min_length: int = 7
    max_length: int = 16
    reward: float = 2.0
    norm_exponent: float = 1.0
    corruption_total: int = 20000
    greedy_max_len: int = 20
    seed: int = 13

    def __post_init__(self) -> None:
        if not 1 <= self.min_length <= self.max_length:
            raise ValueError("invalid length range")
        if self.max_length > self.model.max_tgt_len:
            raise ValueError("length range exceeds the model's slot budget")
        if self.greedy_max_len > self.model.max_tgt_len:
            raise ValueError("greedy probe exceeds the model's slot budget")

    @property
    def lengths(self) -> range:
        return range(self.min_length, self.max_length + 1)

    def out_path(self, name: str) -> Path:
        return Path(self.out_dir) / name

    def validate_inputs(self) -> None:
        for label, p in (
            ("train_tsv", self.train_tsv),
            ("valid_tsv", self.valid_tsv),
            ("test_tsv", self.test_tsv),
        ):
            if not Path(p).is_file():
                raise FileNotFoundError(f"{label} not found: {p}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        raw = dict(raw)
        for key, sub in (
            ("model", ModelConfig),
            ("schedule", ScheduleConfig),
            ("train", TrainConfig),
            ("selector", SelectorConfig),
        ):
            if isinstance(raw.get(key), dict):
                raw[key] = sub(**raw[key])
        train_cfg = raw.get("train")
        if isinstance(train_cfg, TrainConfig) and isinstance(train_cfg.betas, list):
            raw["train"] = dataclasses.replace(train_cfg, betas=tuple(train_cfg.betas))
        return cls(**raw)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def derive_seed(master: int, tag: str) -> int:
    digest = hashlib.sha256(f"{master}:{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def round6(x: float) -> float:
    return float(f"{x:.6f}")


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_corpus(cfg: PipelineConfig, train_n: int, valid_n: int, test_n: int) -> None:
    for name, n, tag in (
        (cfg.train_tsv, train_n, "train"),
        (cfg.valid_tsv, valid_n, "valid"),
        (cfg.test_tsv, test_n, "test"),
    ):
        Path(name).parent.mkdir(parents=True, exist_ok=True)
        synth_corpus(n, derive_seed(cfg.seed, f"corpus:{tag}"), name)


def stage_train_generator(cfg: PipelineConfig) -> None:
    pairs = load_tsv(cfg.train_tsv)
    vocab = build_vocab([f"{src} {ref}" for src, ref in pairs])
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(cfg.out_path("vocab.txt"))
    model_cfg = dataclasses.replace(cfg.model, seed=derive_seed(cfg.seed, "init"))
    train_cfg = dataclasses.replace(cfg.train, seed=derive_seed(cfg.seed, "train"))
    model, history = train(model_cfg, cfg.schedule, train_cfg, pairs, vocab)
    checkpoint.save_model(model, cfg.out_path("generator.ckpt"))
    records = [
        {"epoch": i + 1, "mean_loss": round6(loss)} for i, loss in enumerate(history)
    ]
    valid_pairs = load_tsv(cfg.valid_tsv)
    records.append({"valid_loss": round6(_valid_loss(model, valid_pairs, vocab, cfg))})
    _write_jsonl(cfg.out_path("train_log.jsonl"), records)


def _valid_loss(model, valid_pairs, vocab: Vocabulary, cfg: PipelineConfig) -> float:
    from .training import _encode_pairs

    rng = np.random.default_rng(derive_seed(cfg.seed, "valid"))
    rates = (cfg.schedule.src_end, cfg.schedule.tgt_end)
    encoded = _encode_pairs(valid_pairs, vocab, model.config)
    losses = []
    with torch.no_grad():
        for start in range(0, len(encoded), cfg.train.batch_size):
            chunk = encoded[start : start + cfg.train.batch_size]
            batch = [
                corrupt_for_training(
                    src,
                    tgt,
                    rates,
                    rng,
                    vocab.size,
                    mix=(cfg.schedule.replace_mask, cfg.schedule.replace_random),
                )
                for src, tgt in chunk
            ]
            losses.append(denoise_loss(model, batch).item())
    return float(np.mean(losses))


def _load_generator(cfg: PipelineConfig):
    vocab = Vocabulary.load(cfg.out_path("vocab.txt"))
    model = checkpoint.load_model(cfg.out_path("generator.ckpt"), vocab.size)
    return vocab, model


def stage_generate(cfg: PipelineConfig) -> None:
    vocab, model = _load_generator(cfg)
    pairs = load_tsv(cfg.test_tsv)
    hyp_records, len_records = [], []
    for instance_id, (src_text, _ref) in enumerate(pairs, start=1):
        source = TokenSeq(encode(src_text, vocab).ids[: cfg.model.max_src_len])
        hyps = over_generate(model, source, cfg.lengths, cfg.beam_size)
        for hyp in hyps:
            hyp_records.append(
                {
                    "instance_id": instance_id,
                    "L": hyp.length,
                    "tokens": decode_tokens(hyp.tokens, vocab),
                    "order": ",".join(str(s) for s in hyp.order),
                    "score": round6(hyp.score),
                }
            )
        _seq, l_pred = greedy_left_to_right(model, source, cfg.greedy_max_len)
        len_records.append(
            {
                "instance_id": instance_id,
                "l_pred": l_pred,
                "truncated": l_pred >= cfg.greedy_max_len,
            }
        )
    _write_jsonl(cfg.out_path("hypotheses.jsonl"), hyp_records)
    _write_jsonl(cfg.out_path("lengths.jsonl"), len_records)


def stage_build_corruptions(cfg: PipelineConfig) -> None:
    pairs = load_tsv(cfg.train_tsv)
    rng = np.random.default_rng(derive_seed(cfg.seed, "corrupt"))
    instances = build_selector_dataset(pairs, cfg.corruption_total, rng)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    save_dataset(instances, cfg.out_path("corruptions.tsv"))


def stage_train_selector(cfg: PipelineConfig) -> None:
    vocab = Vocabulary.load(cfg.out_path("vocab.txt"))
    instances = load_dataset(cfg.out_path("corruptions.tsv"))
    selector_cfg = dataclasses.replace(cfg.selector, seed=derive_seed(cfg.seed, "selector"))
    clf, metrics = train_quality_selector(instances, vocab, selector_cfg)
    checkpoint.save_classifier(clf, cfg.out_path("selector.ckpt"))
    with open(cfg.out_path("selector_metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {"holdout_accuracy": round6(metrics["holdout_accuracy"]),
             "n_holdout": metrics["n_holdout"]},
            fh,
            sort_keys=True,
        )
        fh.write("\n")


def _hypotheses_by_instance(cfg: PipelineConfig) -> dict[int, list[Hypothesis]]:
    vocab = Vocabulary.load(cfg.out_path("vocab.txt"))
    by_instance: dict[int, list[Hypothesis]] = {}
    for rec in _read_jsonl(cfg.out_path("hypotheses.jsonl")):
        hyp = Hypothesis(
            tokens=encode(rec["tokens"], vocab),
            order=tuple(int(s) for s in rec["order"].split(",")),
            score=rec["score"],
        )
        by_instance.setdefault(rec["instance_id"], []).append(hyp)
    return by_instance


def stage_select(cfg: PipelineConfig, modes: tuple[str, ...] = SELECT_MODES) -> None:
    vocab = Vocabulary.load(cfg.out_path("vocab.txt"))
    clf = None
    if "best_quality" in modes:
        clf = checkpoint.load_classifier(cfg.out_path("selector.ckpt"), vocab.size)
    pairs = load_tsv(cfg.test_tsv)
    l_pred = {
        rec["instance_id"]: rec["l_pred"]
        for rec in _read_jsonl(cfg.out_path("lengths.jsonl"))
    }
    by_instance = _hypotheses_by_instance(cfg)
    records = []
    for instance_id, (src_text, _ref) in enumerate(pairs, start=1):
        hyps = by_instance.get(instance_id)
        if not hyps:
            raise ValueError(f"instance {instance_id} has no hypotheses")
        ctx = SelectionContext(
            vocab=vocab,
            source=src_text,
            classifier=clf,
            reward=LengthRewardConfig(
                reward=cfg.reward,
                norm_exponent=cfg.norm_exponent,
                predicted_length=l_pred[instance_id],
            ),
        )
        for mode in modes:
            chosen = select(hyps, mode, ctx)
            if mode == "average":
                for hyp in chosen:
                    records.append(
                        {
                            "instance_id": instance_id,
                            "mode": mode,
                            "chosen_L": hyp.length,
                            "score": round6(hyp.score),
                        }
                    )
                continue
            rec = {
                "instance_id": instance_id,
                "mode": mode,
                "chosen_L": chosen.length,
                "score": round6(selection_score(chosen, mode, ctx)),
            }
            if mode == "best_quality":
                rec["probability"] = rec["score"]
            records.append(rec)
    _write_jsonl(cfg.out_path("selections.jsonl"), records)


def stage_evaluate(cfg: PipelineConfig) -> None:
    vocab = Vocabulary.load(cfg.out_path("vocab.txt"))
    pairs = load_tsv(cfg.test_tsv)
    instances = [
        EvalInstance(instance_id=i, source=src, reference=ref)
        for i, (src, ref) in enumerate(pairs, start=1)
    ]
    texts: dict[int, dict[int, str]] = {}
    for rec in _read_jsonl(cfg.out_path("hypotheses.jsonl")):
        texts.setdefault(rec["instance_id"], {})[rec["L"]] = rec["tokens"]
    by_instance = _hypotheses_by_instance(cfg)
    selections: dict[str, dict[int, str]] = {}
    for rec in _read_jsonl(cfg.out_path("selections.jsonl")):
        if rec["mode"] in ("best_quality", "best_length"):
            chosen = next(
                h for h in by_instance[rec["instance_id"]] if h.length == rec["chosen_L"]
            )
            selections.setdefault(rec["mode"], {})[rec["instance_id"]] = decode_tokens(
                chosen.tokens, vocab
            )
    table = per_length_report(instances, texts, selections, tuple(cfg.lengths))
    with open(cfg.out_path("report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table.render() + "\n")
    _write_jsonl(cfg.out_path("report.jsonl"), table.to_records())


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


ARTIFACTS = (
    "vocab.txt",
    "generator.ckpt",
    "train_log.jsonl",
    "hypotheses.jsonl",
    "lengths.jsonl",
    "corruptions.tsv",
    "selector.ckpt",
    "selector_metrics.json",
    "selections.jsonl",
    "report.txt",
    "report.jsonl",
)


def write_manifest(cfg: PipelineConfig) -> Path:
    snapshot = cfg.to_dict()
    for key in ("train_tsv", "valid_tsv", "test_tsv", "out_dir"):
        snapshot.pop(key)
    manifest = {
        "format": 1,
        "seed": cfg.seed,
        "config": snapshot,
        "inputs": {
            "train_tsv": _sha256(Path(cfg.train_tsv)),
            "valid_tsv": _sha256(Path(cfg.valid_tsv)),
            "test_tsv": _sha256(Path(cfg.test_tsv)),
        },
        "artifacts": {
            name: _sha256(cfg.out_path(name))
            for name in ARTIFACTS
            if cfg.out_path(name).is_file()
        },
    }
    path = cfg.out_path("manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


_STAGE_FUNCS = {
    "train-generator": stage_train_generator,
    "generate": stage_generate,
    "build-corruptions": stage_build_corruptions,
    "train-selector": stage_train_selector,
    "select": stage_select,
    "evaluate": stage_evaluate,
}


def run_pipeline(cfg: PipelineConfig) -> Path:
    """Run every stage in order and write the manifest. Returns its path."""
    cfg.validate_inputs()
    for stage in STAGES:
        logger.info("running stage %s", stage)
        try:
            _STAGE_FUNCS[stage](cfg)
        except Exception as exc:
            raise StageError(stage, exc) from exc
    return write_manifest(cfg)
