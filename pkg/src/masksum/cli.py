"""Command-line entry points.

Exit codes: 0 success, 1 usage/config error, 2 stage failure. Flags override
the JSON config file, which carries every remaining knob.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import torch

from . import pipeline
from .pipeline import PipelineConfig, StageError

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
STAGE_FAILURE = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--outdir", help="output directory for artifacts")
    parser.add_argument("--train", dest="train_tsv", help="training TSV path")
    parser.add_argument("--valid", dest="valid_tsv", help="validation TSV path")
    parser.add_argument("--test", dest="test_tsv", help="test TSV path")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--beam", type=int, help="beam size")
    parser.add_argument("--min-length", type=int, help="shortest target length")
    parser.add_argument("--max-length", type=int, help="longest target length")
    parser.add_argument("--epochs", type=int, help="generator training epochs")
    parser.add_argument("--lr", type=float, help="generator learning rate")
    parser.add_argument("--reward", type=float, help="per-word reward coefficient")
    parser.add_argument("--corruption-total", type=int, help="selector dataset size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="masksum",
        description="Over-generate exact-length summaries, then select admissible ones.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", help="write deterministic synthetic TSV splits")
    _add_common(p)
    p.add_argument("--train-n", type=int, default=5000)
    p.add_argument("--valid-n", type=int, default=200)
    p.add_argument("--test-n", type=int, default=300)

    for name, help_text in (
        ("train-generator", "train the masked denoising generator"),
        ("generate", "over-generate hypotheses for the test split"),
        ("build-corruptions", "build the selector training set"),
        ("train-selector", "train the quality classifier"),
        ("evaluate", "write the per-length score report"),
        ("pipeline", "run every stage and write the manifest"),
    ):
        _add_common(sub.add_parser(name, help=help_text))

    p = sub.add_parser("select", help="pick summaries with the trained selectors")
    _add_common(p)
    p.add_argument(
        "--mode",
        choices=["quality", "length", "lennorm", "average", "all"],
        default="all",
    )
    return parser


_MODE_ALIASES = {
    "quality": ("best_quality",),
    "length": ("best_length",),
    "lennorm": ("length_norm",),
    "average": ("average",),
    "all": pipeline.SELECT_MODES,
}


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides: dict = {}
    for flag, key in (
        ("outdir", "out_dir"),
        ("train_tsv", "train_tsv"),
        ("valid_tsv", "valid_tsv"),
        ("test_tsv", "test_tsv"),
        ("seed", "seed"),
        ("beam", "beam_size"),
        ("min_length", "min_length"),
        ("max_length", "max_length"),
        ("reward", "reward"),
        ("corruption_total", "corruption_total"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "epochs", None) is not None:
        overrides["train"] = dataclasses.replace(cfg.train, epochs=args.epochs)
    if getattr(args, "lr", None) is not None:
        base = overrides.get("train", cfg.train)
        overrides["train"] = dataclasses.replace(base, lr=args.lr)
    return dataclasses.replace(cfg, **overrides)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    torch.set_num_threads(4)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _build_config(args)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        logger.error("config error: %s", exc)
        return USAGE_ERROR

    if args.command == "synth-corpus":
        pipeline.write_corpus(cfg, args.train_n, args.valid_n, args.test_n)
        return 0

    try:
        cfg.validate_inputs()
    except FileNotFoundError as exc:
        logger.error("config error: %s", exc)
        return USAGE_ERROR

    try:
        if args.command == "pipeline":
            manifest = pipeline.run_pipeline(cfg)
            logger.info("manifest written to %s", manifest)
        elif args.command == "select":
            pipeline.stage_select(cfg, _MODE_ALIASES[args.mode])
        else:
            stage = {
                "train-generator": pipeline.stage_train_generator,
                "generate": pipeline.stage_generate,
                "build-corruptions": pipeline.stage_build_corruptions,
                "train-selector": pipeline.stage_train_selector,
                "evaluate": pipeline.stage_evaluate,
            }[args.command]
            stage(cfg)
    except StageError as exc:
        logger.error("%s", exc)
        return STAGE_FAILURE
    except Exception as exc:
        logger.error("stage %s failed: %s", args.command, exc)
        return STAGE_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
