import json
from pathlib import Path

import pytest

from masksum.cli import main
from masksum.pipeline import ARTIFACTS, PipelineConfig


def _tiny_config(tmp_path: Path) -> Path:
    cfg = {
        "train_tsv": str(tmp_path / "train.tsv"),
        "valid_tsv": str(tmp_path / "valid.tsv"),
        "test_tsv": str(tmp_path / "test.tsv"),
        "out_dir": str(tmp_path / "out"),
        "model": {
            "blocks": 1,
            "hidden": 16,
            "heads": 2,
            "max_src_len": 36,
            "max_tgt_len": 20,
            "seed": 0,
        },
        "train": {"epochs": 2, "batch_size": 16, "lr": 1e-3, "seed": 0},
        "selector": {
            "hidden": 16,
            "blocks": 1,
            "heads": 2,
            "max_len": 36,
            "epochs": 1,
            "batch_size": 32,
            "seed": 0,
        },
        "beam_size": 3,
        "corruption_total": 200,
        "seed": 21,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli_run")
    config = _tiny_config(tmp_path)
    assert main(["synth-corpus", "--config", str(config),
                 "--train-n", "120", "--valid-n", "16", "--test-n", "6"]) == 0
    assert main(["pipeline", "--config", str(config)]) == 0
    return tmp_path, config


def test_pipeline_writes_every_artifact(finished_run):
    tmp_path, _config = finished_run
    out = tmp_path / "out"
    for name in ARTIFACTS + ("manifest.json",):
        assert (out / name).is_file(), name


def test_manifest_has_config_snapshot_and_hashes(finished_run):
    tmp_path, _config = finished_run
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["format"] == 1
    assert manifest["seed"] == 21
    assert set(manifest["inputs"]) == {"train_tsv", "valid_tsv", "test_tsv"}
    assert all(len(h) == 64 for h in manifest["inputs"].values())
    assert set(manifest["artifacts"]) == set(ARTIFACTS)
    # no volatile content: paths and timestamps stay out of the manifest
    assert "out_dir" not in manifest["config"]
    assert "train_tsv" not in manifest["config"]


def test_hypothesis_records_have_spec_fields(finished_run):
    tmp_path, _config = finished_run
    lines = (tmp_path / "out" / "hypotheses.jsonl").read_text().splitlines()
    assert len(lines) == 6 * 10
    record = json.loads(lines[0])
    assert set(record) == {"instance_id", "L", "tokens", "order", "score"}
    assert record["L"] == 7
    assert len(record["tokens"].split()) == 7
    assert len(record["order"].split(",")) == 7
    assert record["score"] <= 0


def test_selection_records_cover_all_modes(finished_run):
    tmp_path, _config = finished_run
    records = [
        json.loads(line)
        for line in (tmp_path / "out" / "selections.jsonl").read_text().splitlines()
    ]
    modes = {r["mode"] for r in records}
    assert modes == {"best_quality", "best_length", "length_norm", "average"}
    quality = [r for r in records if r["mode"] == "best_quality"]
    assert all("probability" in r and 0 < r["probability"] < 1 for r in quality)
    average = [r for r in records if r["mode"] == "average"]
    assert len(average) == 6 * 10


def test_report_has_all_columns(finished_run):
    tmp_path, _config = finished_run
    records = [
        json.loads(line)
        for line in (tmp_path / "out" / "report.jsonl").read_text().splitlines()
    ]
    columns = {r["column"] for r in records}
    expected = {f"L{n}" for n in range(7, 17)} | {
        "avg", "best_quality", "best_length", "oracle",
    }
    assert columns == expected
    text = (tmp_path / "out" / "report.txt").read_text()
    assert "Oracle" in text and "R-2" in text


def test_rerunning_a_stage_is_idempotent(finished_run):
    tmp_path, config = finished_run
    report = tmp_path / "out" / "report.jsonl"
    before = report.read_bytes()
    assert main(["evaluate", "--config", str(config)]) == 0
    assert report.read_bytes() == before


def test_select_single_mode_rewrites_subset(finished_run):
    tmp_path, config = finished_run
    assert main(["select", "--config", str(config), "--mode", "length"]) == 0
    records = [
        json.loads(line)
        for line in (tmp_path / "out" / "selections.jsonl").read_text().splitlines()
    ]
    assert {r["mode"] for r in records} == {"best_length"}
    # restore the full set for any later test
    assert main(["select", "--config", str(config), "--mode", "all"]) == 0


def test_missing_input_is_a_usage_error(tmp_path):
    config = _tiny_config(tmp_path)  # TSVs not generated
    assert main(["pipeline", "--config", str(config)]) == 1
    assert not (tmp_path / "out").exists()


def test_stage_failure_exit_code(tmp_path):
    config = _tiny_config(tmp_path)
    assert main(["synth-corpus", "--config", str(config),
                 "--train-n", "20", "--valid-n", "4", "--test-n", "2"]) == 0
    # generate before train-generator: vocab and checkpoint are missing
    assert main(["generate", "--config", str(config)]) == 2


def test_flag_overrides_config(tmp_path):
    config = _tiny_config(tmp_path)
    cfg = PipelineConfig.load(config)
    assert cfg.beam_size == 3
    import argparse

    from masksum.cli import _build_config, build_parser

    args = build_parser().parse_args(
        ["pipeline", "--config", str(config), "--beam", "9", "--seed", "99"]
    )
    merged = _build_config(args)
    assert merged.beam_size == 9
    assert merged.seed == 99
    assert merged.corruption_total == 200


def test_synth_corpus_deterministic(tmp_path):
    config = _tiny_config(tmp_path)
    assert main(["synth-corpus", "--config", str(config),
                 "--train-n", "30", "--valid-n", "5", "--test-n", "5"]) == 0
    first = (tmp_path / "train.tsv").read_bytes()
    assert main(["synth-corpus", "--config", str(config),
                 "--train-n", "30", "--valid-n", "5", "--test-n", "5"]) == 0
    assert (tmp_path / "train.tsv").read_bytes() == first
