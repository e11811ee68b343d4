"""Checkpoint container for trained models.

One JSON file per model: a header with architecture/permutation/standardizer
metadata plus flat parameter arrays in declared order. The same container
holds CNN, K-out-of-N, and SVM payloads under a `kind` tag. JSON decimal
floats round-trip float64 exactly.
"""

from __future__ import annotations

import json

import numpy as np

from dcsense.baselines import KonRule, LinearSvmModel
from dcsense.dataset import Standardizer
from dcsense.dcs import ArchConfig, CnnModel, build_model

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""


def _standardizer_to_dict(s: Standardizer | None):
    if s is None:
        return None
    return {"mean": s.mean, "std": s.std, "domain": s.domain}


def _standardizer_from_dict(d) -> Standardizer | None:
    if d is None:
        return None
    return Standardizer(mean=d["mean"], std=d["std"], domain=d["domain"])


def _cnn_payload(model: CnnModel) -> dict:
    return {
        "arch": {
            "n_conv_blocks": model.arch.n_conv_blocks,
            "conv_depths": list(model.arch.conv_depths),
            "fc_widths": list(model.arch.fc_widths),
        },
        "input_dims": list(model.input_dims),
        "mode": model.mode,
        "permutation": model.su_permutation.tolist(),
        "standardizer": _standardizer_to_dict(model.standardizer),
        "params": {
            "conv": [
                {"weights": cp.weights.ravel().tolist(), "bias": cp.bias.tolist()}
                for cp in model.conv
            ],
            "fc1": {"weights": model.fc1.weights.ravel().tolist(), "bias": model.fc1.bias.tolist()},
            "fc2": {"weights": model.fc2.weights.ravel().tolist(), "bias": model.fc2.bias.tolist()},
            "softmax": {"weights": model.softmax.weights.ravel().tolist()},
        },
    }


def _cnn_from_payload(payload: dict) -> CnnModel:
    arch = ArchConfig(
        n_conv_blocks=payload["arch"]["n_conv_blocks"],
        conv_depths=tuple(payload["arch"]["conv_depths"]),
        fc_widths=tuple(payload["arch"]["fc_widths"]),
    )
    model = build_model(
        arch,
        tuple(payload["input_dims"]),
        np.random.default_rng(0),
        permutation=np.array(payload["permutation"], dtype=int),
        mode=payload["mode"],
        standardizer=_standardizer_from_dict(payload["standardizer"]),
    )
    params = payload["params"]
    for cp, stored in zip(model.conv, params["conv"]):
        cp.weights[...] = np.array(stored["weights"]).reshape(cp.weights.shape)
        cp.bias[...] = np.array(stored["bias"])
    for name in ("fc1", "fc2"):
        layer = getattr(model, name)
        layer.weights[...] = np.array(params[name]["weights"]).reshape(layer.weights.shape)
        layer.bias[...] = np.array(params[name]["bias"])
    model.softmax.weights[...] = np.array(params["softmax"]["weights"]).reshape(
        model.softmax.weights.shape
    )
    return model


def save_model(model, path: str) -> None:
    if isinstance(model, CnnModel):
        kind, payload = "dcs", _cnn_payload(model)
    elif isinstance(model, KonRule):
        kind, payload = "kon", {"k": model.k, "statistic": model.statistic}
    elif isinstance(model, LinearSvmModel):
        kind, payload = "svm", {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "lam": model.lam,
            "mode": model.mode,
            "standardizer": _standardizer_to_dict(model.standardizer),
        }
    else:
        raise TypeError(f"cannot checkpoint object of type {type(model).__name__}")
    doc = {"version": CHECKPOINT_VERSION, "kind": kind, "payload": payload}
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: invalid JSON checkpoint: {exc}")
    if not isinstance(doc, dict) or doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {doc.get('version') if isinstance(doc, dict) else None!r}"
        )
    kind = doc.get("kind")
    payload = doc.get("payload", {})
    if kind == "dcs":
        return _cnn_from_payload(payload)
    if kind == "kon":
        return KonRule(k=payload["k"], statistic=payload["statistic"])
    if kind == "svm":
        return LinearSvmModel(
            weights=np.array(payload["weights"]),
            bias=payload["bias"],
            lam=payload["lam"],
            mode=payload["mode"],
            standardizer=_standardizer_from_dict(payload["standardizer"]),
        )
    raise CheckpointError(f"{path}: unknown checkpoint kind {kind!r}")
