"""Labeled sensing datasets: generation along a trajectory, scaling, and I/O.

File format is line-delimited JSON: one header record carrying the format
version, scenario, mode, and dimensions, then one record per sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from dcsense import sensing, simcore
from dcsense.config import ScenarioConfig, watts_to_dbm
from dcsense.sensing import MODE_HD, MODE_SD, SensingMatrix
from dcsense.streams import substream

DATASET_VERSION = 1

H0, H1 = 0, 1


class DatasetFormatError(ValueError):
    """Malformed or incompatible dataset file."""


@dataclass
class LabeledSample:
    matrix: SensingMatrix
    label: int  # H0 or H1
    snapshot_index: int


@dataclass
class Dataset:
    scenario: ScenarioConfig
    samples: list = field(default_factory=list)
    mode: str = MODE_SD

    def __len__(self) -> int:
        return len(self.samples)

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=int)

    def matrices(self) -> np.ndarray:
        """Stacked (n_samples, n_su, n_bands) value array."""
        return np.stack([s.matrix.values for s in self.samples])


@dataclass
class Standardizer:
    mean: float
    std: float
    domain: str = "db_scale"


def generate_dataset(
    cfg: ScenarioConfig,
    n_samples: int,
    mode: str,
    seed,
    gamma_dbm: float | None = None,
    redeploy: bool = False,
) -> Dataset:
    """Simulate one mobile trajectory and sense a labeled snapshot per step.

    Each snapshot draws its PU state, shadow field, and channel samples from
    an independent stream derived from (seed, snapshot index); mobility is
    sequential along the trajectory. `redeploy` re-scatters all nodes every
    snapshot instead of moving them (ablation mode).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if mode not in (MODE_SD, MODE_HD):
        raise ValueError(f"unknown mode: {mode}")
    gamma = cfg.gamma_dbm if gamma_dbm is None else gamma_dbm
    topo = simcore.init_topology(cfg, substream(seed, "topo"))
    rng_mob = substream(seed, "mobility")
    samples = []
    for i in range(n_samples):
        if redeploy:
            topo = simcore.init_topology(cfg, substream(seed, "topo", i + 1))
        else:
            topo = simcore.step_mobility(topo, cfg, rng_mob)
        rng_snap = substream(seed, "snapshot", i)
        pu = simcore.sample_pu_state(cfg, rng_snap)
        shadow = simcore.sample_shadow_field(topo.su_positions, cfg, rng_snap)
        matrix = sensing.sense_snapshot(topo, pu, shadow, cfg, rng_snap)
        if mode == MODE_HD:
            matrix = sensing.hard_decision(matrix, gamma)
        samples.append(LabeledSample(matrix, H1 if pu.active else H0, i))
    return Dataset(scenario=cfg, samples=samples, mode=mode)


def fit_standardizer(train: Dataset) -> Standardizer:
    """Global dB-domain mean/std over all SD entries of the training set."""
    if train.mode != MODE_SD:
        raise ValueError("standardizer is fitted on soft-decision data only")
    if len(train) == 0:
        raise ValueError("cannot fit a standardizer on an empty dataset")
    values_db = watts_to_dbm(train.matrices())
    mean = float(np.mean(values_db))
    std = float(np.std(values_db))
    if std <= 0.0:
        raise ValueError("training data has zero variance; cannot standardize")
    return Standardizer(mean=mean, std=std)


def apply_standardizer(s: Standardizer | None, matrix: SensingMatrix) -> np.ndarray:
    """Standardized real feature matrix; HD bits pass through unchanged."""
    if matrix.mode == MODE_HD:
        return matrix.values.astype(float)
    if s is None:
        raise ValueError("soft-decision input requires a fitted standardizer")
    return (watts_to_dbm(matrix.values) - s.mean) / s.std


def save_dataset(ds: Dataset, path: str) -> None:
    header = {
        "version": DATASET_VERSION,
        "scenario": ds.scenario.to_dict(),
        "mode": ds.mode,
        "n_su": ds.scenario.n_su,
        "n_bands": ds.scenario.n_bands,
        "n_samples": len(ds),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in ds.samples:
            record = {
                "idx": s.snapshot_index,
                "label": s.label,
                "rows": s.matrix.values.tolist(),
            }
            fh.write(json.dumps(record) + "\n")


def load_dataset(path: str) -> Dataset:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty dataset file")
    header = _parse_line(path, 1, lines[0])
    if header.get("version") != DATASET_VERSION:
        raise DatasetFormatError(
            f"{path}: unsupported dataset version {header.get('version')!r} "
            f"(expected {DATASET_VERSION})"
        )
    for key in ("scenario", "mode", "n_su", "n_bands", "n_samples"):
        if key not in header:
            raise DatasetFormatError(f"{path}: header missing field {key!r}")
    cfg = ScenarioConfig.from_dict(header["scenario"])
    mode = header["mode"]
    if mode not in (MODE_SD, MODE_HD):
        raise DatasetFormatError(f"{path}: unknown mode {mode!r}")
    if len(lines) - 1 != header["n_samples"]:
        raise DatasetFormatError(
            f"{path}: expected {header['n_samples']} sample records, "
            f"found {len(lines) - 1} (truncated or corrupt file)"
        )
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        rec = _parse_line(path, lineno, line)
        for key in ("idx", "label", "rows"):
            if key not in rec:
                raise DatasetFormatError(f"{path}:{lineno}: record missing field {key!r}")
        values = np.array(rec["rows"], dtype=float)
        if values.shape != (header["n_su"], header["n_bands"]):
            raise DatasetFormatError(
                f"{path}:{lineno}: matrix shape {values.shape} does not match "
                f"header ({header['n_su']}, {header['n_bands']})"
            )
        if rec["label"] not in (H0, H1):
            raise DatasetFormatError(f"{path}:{lineno}: label must be 0 or 1")
        samples.append(
            LabeledSample(SensingMatrix(mode=mode, values=values), int(rec["label"]), int(rec["idx"]))
        )
    return Dataset(scenario=cfg, samples=samples, mode=mode)


def _parse_line(path: str, lineno: int, line: str) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}:{lineno}: invalid JSON record: {exc}")
    if not isinstance(rec, dict):
        raise DatasetFormatError(f"{path}:{lineno}: record must be a JSON object")
    return rec
