"""Deterministic single-file checkpoints.

Layout: 4-byte magic, 1 format-version byte, 4-byte little-endian header
length, UTF-8 JSON header (config, vocab size, tensor specs in a fixed
order), then raw little-endian float64 buffers. Identical models serialize
to identical bytes, which is what makes run manifests comparable.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .model import MaskedSlotModel, ModelConfig
from .selector import QualityClassifier, SelectorConfig

MODEL_MAGIC = b"MSUM"
CLASSIFIER_MAGIC = b"MSQC"
FORMAT_VERSION = 1


def _write(path: str | Path, magic: bytes, header: dict, module: nn.Module) -> None:
    state = module.state_dict()
    names = sorted(state.keys())
    header = dict(header, tensors=[{"name": n, "shape": list(state[n].shape)} for n in names])
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(bytes([FORMAT_VERSION]))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in names:
            fh.write(state[name].numpy().astype("<f8").tobytes())


def _read(path: str | Path, magic: bytes) -> tuple[dict, dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != magic:
        raise ValueError("unrecognized checkpoint file")
    if raw[4] != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {raw[4]}")
    (header_len,) = struct.unpack("<I", raw[5:9])
    header = json.loads(raw[9 : 9 + header_len].decode("utf-8"))
    offset = 9 + header_len
    state = {}
    for spec in header["tensors"]:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        buf = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        state[spec["name"]] = torch.from_numpy(buf.copy()).reshape(spec["shape"])
    return header, state


def save_model(model: MaskedSlotModel, path: str | Path) -> None:
    header = {
        "config": dataclasses.asdict(model.config),
        "vocab_size": model.vocab_size,
        "step_count": model.step_count,
    }
    _write(path, MODEL_MAGIC, header, model)


def load_model(path: str | Path, expected_vocab_size: int) -> MaskedSlotModel:
    header, state = _read(path, MODEL_MAGIC)
    if header["vocab_size"] != expected_vocab_size:
        raise ValueError(
            f"vocabulary size mismatch: checkpoint has {header['vocab_size']}, "
            f"expected {expected_vocab_size}"
        )
    model = MaskedSlotModel(ModelConfig(**header["config"]), header["vocab_size"])
    model.step_count = header["step_count"]
    model.load_state_dict(state)
    return model


def save_classifier(clf: QualityClassifier, path: str | Path) -> None:
    header = {
        "config": dataclasses.asdict(clf.config),
        "vocab_size": clf.vocab_size,
    }
    _write(path, CLASSIFIER_MAGIC, header, clf)


def load_classifier(path: str | Path, expected_vocab_size: int) -> QualityClassifier:
    header, state = _read(path, CLASSIFIER_MAGIC)
    if header["vocab_size"] != expected_vocab_size:
        raise ValueError(
            f"vocabulary size mismatch: checkpoint has {header['vocab_size']}, "
            f"expected {expected_vocab_size}"
        )
    clf = QualityClassifier(SelectorConfig(**header["config"]), header["vocab_size"])
    clf.load_state_dict(state)
    return clf
