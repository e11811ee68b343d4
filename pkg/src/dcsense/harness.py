"""Metrics, figure-reproduction sweeps, and latency benchmarking."""

from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass, field, replace

import numpy as np

from dcsense import baselines, dcs
from dcsense.config import ScenarioConfig
from dcsense.dataset import Dataset, generate_dataset
from dcsense.sensing import MODE_HD, MODE_SD, hard_decision, SensingMatrix
from dcsense.streams import subseed, substream

METHOD_DCS_SD = "DCS-SD"
METHOD_DCS_HD = "DCS-HD"
METHOD_KON = "KON"
METHOD_SVM_SD = "SVM-SD"
METHOD_SVM_HD = "SVM-HD"
ALL_METHODS = (METHOD_DCS_SD, METHOD_DCS_HD, METHOD_KON, METHOD_SVM_SD, METHOD_SVM_HD)

GAMMA_FIXED = "fixed"
GAMMA_NOISE_FLOOR = "noise_floor"
# Margin above the noise floor for the adaptive threshold. Large enough that
# hard decisions stay lossy (misses occur under shadowing) instead of acting
# as a noiseless oracle, small enough that votes remain informative.
DEFAULT_GAMMA_MARGIN_DB = 12.0

SWEEP_CSV_HEADER = ["param", "method", "p_fa", "p_md", "sensing_error", "reps"]
LATENCY_CSV_HEADER = ["method", "n_su", "mean_ms", "median_ms", "p95_ms"]


@dataclass
class Metrics:
    p_fa: float
    p_md: float
    sensing_error: float
    n_h0: int
    n_h1: int
    p_fa_valid: bool
    p_md_valid: bool


def metrics_from_decisions(decisions: np.ndarray, labels: np.ndarray) -> Metrics:
    decisions = np.asarray(decisions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if decisions.shape != labels.shape:
        raise ValueError("decisions and labels must have the same length")
    h0 = labels == 0
    h1 = labels == 1
    n_h0, n_h1 = int(h0.sum()), int(h1.sum())
    p_fa = float(np.mean(decisions[h0] == 1)) if n_h0 > 0 else float("nan")
    p_md = float(np.mean(decisions[h1] == 0)) if n_h1 > 0 else float("nan")
    valid = n_h0 > 0 and n_h1 > 0
    return Metrics(
        p_fa=p_fa,
        p_md=p_md,
        sensing_error=p_fa + p_md if valid else float("nan"),
        n_h0=n_h0,
        n_h1=n_h1,
        p_fa_valid=n_h0 > 0,
        p_md_valid=n_h1 > 0,
    )


def evaluate(predictor, eval_set: Dataset) -> Metrics:
    """Confusion-based metrics of any per-matrix predictor over a dataset.

    `predictor` is a callable mapping a SensingMatrix to a 0/1 decision, or
    an object with a batch interface via `predict_batch(dataset)`.
    """
    if len(eval_set) == 0:
        raise ValueError("evaluation set is empty")
    if hasattr(predictor, "predict_batch"):
        decisions = predictor.predict_batch(eval_set)
    else:
        decisions = np.array([predictor(s.matrix) for s in eval_set.samples], dtype=int)
    return metrics_from_decisions(decisions, eval_set.labels())


@dataclass
class SweepSpec:
    param: str  # ScenarioConfig field name, or "n_train"
    values: list
    scenario: ScenarioConfig
    methods: tuple = ALL_METHODS
    repetitions: int = 5
    seed: int = 0
    train: dcs.TrainConfig = field(default_factory=dcs.TrainConfig)
    arch: dcs.ArchConfig = field(default_factory=dcs.ArchConfig)
    n_train: int = 200
    n_eval: int = 2000
    gamma_policy: str = GAMMA_NOISE_FLOOR
    gamma_margin_db: float = DEFAULT_GAMMA_MARGIN_DB

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep needs a nonempty value list")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.gamma_policy not in (GAMMA_FIXED, GAMMA_NOISE_FLOOR):
            raise ValueError(f"unknown gamma policy: {self.gamma_policy}")


def effective_gamma_dbm(cfg: ScenarioConfig, policy: str, margin_db: float = DEFAULT_GAMMA_MARGIN_DB) -> float:
    """Hard-decision threshold under the chosen policy.

    The fixed policy uses the configured threshold. The noise-floor policy
    tracks N_0*W plus a margin, which keeps 1-bit reports informative when
    the configured threshold would sit below the noise floor and saturate.
    """
    if policy == GAMMA_FIXED:
        return cfg.gamma_dbm
    return cfg.noise_floor_dbm + margin_db


def _to_hd(ds: Dataset, gamma_dbm: float) -> Dataset:
    samples = [
        dataclasses.replace(s, matrix=hard_decision(s.matrix, gamma_dbm)) for s in ds.samples
    ]
    return Dataset(scenario=ds.scenario, samples=samples, mode=MODE_HD)


def _point_config(spec: SweepSpec, value):
    if spec.param == "n_train":
        return spec.scenario, int(value)
    cfg = replace(spec.scenario, **{spec.param: value})
    return cfg, spec.n_train


def _fit_and_evaluate(spec: SweepSpec, cfg: ScenarioConfig, n_train: int, rep: int) -> dict:
    """Train every requested method at one sweep point and evaluate it."""
    # Seeds depend on the repetition only, so sweep values share random
    # numbers and adjacent points are positively correlated (variance
    # reduction for trend comparisons).
    train_seed = subseed(spec.seed, "train-data", rep)
    eval_seed = subseed(spec.seed, "eval-data", rep)
    tc = replace(spec.train, seed=int(substream(spec.seed, "train-cfg", rep).integers(1 << 62)))
    train_sd = generate_dataset(cfg, n_train, MODE_SD, train_seed)
    eval_sd = generate_dataset(cfg, spec.n_eval, MODE_SD, eval_seed)
    gamma = effective_gamma_dbm(cfg, spec.gamma_policy, spec.gamma_margin_db)
    needs_hd = any(m in spec.methods for m in (METHOD_DCS_HD, METHOD_KON, METHOD_SVM_HD))
    train_hd = _to_hd(train_sd, gamma) if needs_hd else None
    eval_hd = _to_hd(eval_sd, gamma) if needs_hd else None

    out = {}
    for method in spec.methods:
        if method == METHOD_DCS_SD:
            model, _ = dcs.train_permutation_ensemble(train_sd, tc, spec.arch)
            decisions = dcs.predict_batch(model, eval_sd)
            labels = eval_sd.labels()
        elif method == METHOD_DCS_HD:
            model, _ = dcs.train_permutation_ensemble(train_hd, tc, spec.arch)
            decisions = dcs.predict_batch(model, eval_hd)
            labels = eval_hd.labels()
        elif method == METHOD_KON:
            rule = baselines.fit_kon(train_hd)
            decisions = baselines.predict_kon_batch(rule, eval_hd)
            labels = eval_hd.labels()
        elif method == METHOD_SVM_SD:
            svm = baselines.fit_linear_svm_cv(train_sd, seed=tc.seed)
            decisions = baselines.predict_svm_batch(svm, eval_sd)
            labels = eval_sd.labels()
        else:
            svm = baselines.fit_linear_svm_cv(train_hd, seed=tc.seed)
            decisions = baselines.predict_svm_batch(svm, eval_hd)
            labels = eval_hd.labels()
        out[method] = metrics_from_decisions(decisions, labels)
    return out


def run_sweep(spec: SweepSpec) -> list:
    """Rows of repetition-averaged metrics, ordered by sweep value then method."""
    per_point = {}
    for value in spec.values:
        cfg, n_train = _point_config(spec, value)
        for rep in range(spec.repetitions):
            point = _fit_and_evaluate(spec, cfg, n_train, rep)
            for method, metrics in point.items():
                per_point.setdefault((value, method), []).append(metrics)
    rows = []
    for value in spec.values:
        for method in spec.methods:
            reps = per_point[(value, method)]
            p_fa = float(np.mean([m.p_fa for m in reps]))
            p_md = float(np.mean([m.p_md for m in reps]))
            rows.append(
                {
                    "param": value,
                    "method": method,
                    "p_fa": p_fa,
                    "p_md": p_md,
                    "sensing_error": p_fa + p_md,
                    "reps": len(reps),
                }
            )
    return rows


def _fmt_prob(x: float) -> str:
    return "" if not np.isfinite(x) else f"{x:.6f}"


def write_sweep_csv(rows: list, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row["param"],
                    row["method"],
                    _fmt_prob(row["p_fa"]),
                    _fmt_prob(row["p_md"]),
                    _fmt_prob(row["sensing_error"]),
                    row["reps"],
                ]
            )


@dataclass
class LatencyReport:
    entries: list  # dicts: method, n_su, mean_ms, median_ms, p95_ms


def bench_latency(predictors: dict, eval_set: Dataset, warmup: int = 10, iters: int = 200) -> LatencyReport:
    """Wall-clock single-decision inference timing per method.

    `predictors` maps method name to a callable over one SensingMatrix in the
    matching mode (pass pre-thresholded matrices for HD-consuming methods).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if len(eval_set) == 0:
        raise ValueError("evaluation set is empty")
    matrices = [s.matrix for s in eval_set.samples]
    entries = []
    for method, fn in predictors.items():
        for i in range(warmup):
            fn(matrices[i % len(matrices)])
        times_ms = np.empty(iters)
        for i in range(iters):
            m = matrices[i % len(matrices)]
            t0 = time.perf_counter()
            fn(m)
            times_ms[i] = (time.perf_counter() - t0) * 1e3
        entries.append(
            {
                "method": method,
                "n_su": eval_set.scenario.n_su,
                "mean_ms": float(times_ms.mean()),
                "median_ms": float(np.median(times_ms)),
                "p95_ms": float(np.percentile(times_ms, 95)),
            }
        )
    return LatencyReport(entries=entries)


def write_latency_csv(report: LatencyReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LATENCY_CSV_HEADER)
        for e in report.entries:
            writer.writerow(
                [e["method"], e["n_su"], f"{e['mean_ms']:.4f}", f"{e['median_ms']:.4f}", f"{e['p95_ms']:.4f}"]
            )
