import dataclasses
import json

import pytest
import torch

import masksum.training as training_mod
from masksum.model import ModelConfig
from masksum.pipeline import PipelineConfig, derive_seed, round6
from masksum.training import ScheduleConfig, TrainConfig, train


def test_length_range_must_fit_slot_budget():
    with pytest.raises(ValueError, match="slot budget"):
        PipelineConfig(model=ModelConfig(max_tgt_len=10), min_length=7, max_length=16)
    with pytest.raises(ValueError, match="length range"):
        PipelineConfig(min_length=9, max_length=8)


def test_config_json_round_trip(tmp_path):
    cfg = PipelineConfig(seed=5, beam_size=7)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg.to_dict()), encoding="utf-8")
    loaded = PipelineConfig.load(path)
    assert loaded == cfg
    assert isinstance(loaded.train.betas, tuple)


def test_derive_seed_is_stable_and_tag_sensitive():
    assert derive_seed(13, "train") == derive_seed(13, "train")
    assert derive_seed(13, "train") != derive_seed(13, "init")
    assert derive_seed(13, "train") != derive_seed(14, "train")


def test_round6_formats_fixed_precision():
    assert round6(-12.3456789) == -12.345679
    assert round6(0.1 + 0.2) == 0.3


def test_nan_loss_aborts_with_step_index(monkeypatch, tiny_vocab):
    def poisoned(model, batch):
        return torch.tensor(float("nan"), dtype=torch.float64)

    monkeypatch.setattr(training_mod, "denoise_loss", poisoned)
    cfg = ModelConfig(blocks=1, hidden=8, heads=2, max_src_len=8, max_tgt_len=6, seed=0)
    with pytest.raises(RuntimeError, match="non-finite loss at step 0"):
        train(
            cfg,
            ScheduleConfig(),
            TrainConfig(epochs=1, batch_size=2),
            [("alpha beta", "alpha .")],
            tiny_vocab,
        )


def test_config_is_immutable_snapshot():
    cfg = PipelineConfig()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.seed = 99
