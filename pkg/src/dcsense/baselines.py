"""Conventional fusion baselines: K-out-of-N voting and a linear SVM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dcsense.dataset import Dataset, Standardizer, apply_standardizer, fit_standardizer
from dcsense.dcs import stratified_split
from dcsense.sensing import MODE_HD, MODE_SD, SensingMatrix
from dcsense.streams import substream

DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass
class KonRule:
    k: int
    statistic: str = "max_band_votes"


@dataclass
class LinearSvmModel:
    weights: np.ndarray  # flattened feature space
    bias: float
    lam: float
    mode: str
    standardizer: Standardizer | None = None


def kon_statistic(hd: SensingMatrix) -> int:
    """Largest per-band detection count: per-band K-out-of-N, OR over bands."""
    if hd.mode != MODE_HD:
        raise ValueError("K-out-of-N consumes hard-decision matrices")
    return int(hd.values.sum(axis=0).max())


def _kon_statistics(ds: Dataset) -> np.ndarray:
    if ds.mode != MODE_HD:
        raise ValueError("K-out-of-N consumes hard-decision datasets")
    return ds.matrices().sum(axis=1).max(axis=1).astype(int)


def fit_kon(train: Dataset) -> KonRule:
    """Exhaustive scan of k minimizing empirical P_FA + P_MD; ties -> smallest k."""
    labels = train.labels()
    if len(np.unique(labels)) < 2:
        raise ValueError("K-out-of-N fitting requires both H0 and H1 samples")
    stats = _kon_statistics(train)
    n_su = train.scenario.n_su
    best_k, best_err = 0, np.inf
    for k in range(n_su + 1):
        decisions = (stats >= k).astype(int)
        p_fa = float(np.mean(decisions[labels == 0] == 1))
        p_md = float(np.mean(decisions[labels == 1] == 0))
        err = p_fa + p_md
        if err < best_err:
            best_k, best_err = k, err
    return KonRule(k=best_k)


def predict_kon(rule: KonRule, hd: SensingMatrix) -> int:
    return int(kon_statistic(hd) >= rule.k)


def predict_kon_batch(rule: KonRule, ds: Dataset) -> np.ndarray:
    return (_kon_statistics(ds) >= rule.k).astype(int)


def _svm_features(ds: Dataset, standardizer: Standardizer | None) -> np.ndarray:
    rows = [apply_standardizer(standardizer, s.matrix).ravel() for s in ds.samples]
    return np.stack(rows)


def _pegasos(x: np.ndarray, y_pm: np.ndarray, lam: float, epochs: int, rng) -> tuple:
    """Primal sub-gradient descent on (lam/2)|w|^2 + mean hinge; returns the
    averaged iterate, which is what the theory says to deploy.

    The bias rides along as a constant feature inside the regularized weight
    vector; left unregularized it performs a 1/(lam*t) random walk whose early
    giant steps can leave the averaged bias on the wrong side of zero.
    """
    n, d = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    w = np.zeros(d + 1)
    w_avg = np.zeros(d + 1)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y_pm[i] * (xa[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y_pm[i] * xa[i]
            w_avg += (w - w_avg) / t
    return w_avg[:-1], float(w_avg[-1])


def svm_objective(w: np.ndarray, b: float, x: np.ndarray, y_pm: np.ndarray, lam: float) -> float:
    hinge = np.maximum(0.0, 1.0 - y_pm * (x @ w + b))
    return float(0.5 * lam * (w @ w) + hinge.mean())


def fit_linear_svm(
    train: Dataset,
    lam: float,
    epochs: int = 20,
    seed: int = 0,
    standardizer: Standardizer | None = None,
) -> LinearSvmModel:
    labels = train.labels()
    if len(train) == 0 or len(np.unique(labels)) < 2:
        raise ValueError("SVM fitting requires a nonempty dataset with both labels")
    if train.mode == MODE_SD and standardizer is None:
        standardizer = fit_standardizer(train)
    x = _svm_features(train, standardizer)
    y_pm = labels * 2.0 - 1.0
    w, b = _pegasos(x, y_pm, lam, epochs, substream(seed, "pegasos"))
    return LinearSvmModel(weights=w, bias=float(b), lam=lam, mode=train.mode, standardizer=standardizer)


def fit_linear_svm_cv(
    train: Dataset,
    lam_grid=DEFAULT_LAMBDA_GRID,
    epochs: int = 20,
    seed: int = 0,
    val_fraction: float = 0.2,
) -> LinearSvmModel:
    """Pick lambda by held-out sensing error, then refit on the full set."""
    labels = train.labels()
    if len(np.unique(labels)) < 2:
        raise ValueError("SVM fitting requires both H0 and H1 samples")
    standardizer = fit_standardizer(train) if train.mode == MODE_SD else None
    tr_idx, val_idx = stratified_split(labels, val_fraction, substream(seed, "svm-split"))
    tr = Dataset(train.scenario, [train.samples[i] for i in tr_idx], train.mode)
    val = Dataset(train.scenario, [train.samples[i] for i in val_idx], train.mode)
    x_val = _svm_features(val, standardizer)
    y_val = val.labels()
    best = None
    for lam in lam_grid:
        model = fit_linear_svm(tr, lam, epochs=epochs, seed=seed, standardizer=standardizer)
        decisions = (x_val @ model.weights + model.bias >= 0.0).astype(int)
        p_fa = float(np.mean(decisions[y_val == 0] == 1)) if np.any(y_val == 0) else 0.0
        p_md = float(np.mean(decisions[y_val == 1] == 0)) if np.any(y_val == 1) else 0.0
        err = p_fa + p_md
        if best is None or err < best[0]:
            best = (err, lam)
    return fit_linear_svm(train, best[1], epochs=epochs, seed=seed, standardizer=standardizer)


def predict_svm(model: LinearSvmModel, matrix: SensingMatrix) -> int:
    if matrix.mode != model.mode:
        raise ValueError(f"matrix mode {matrix.mode} does not match model mode {model.mode}")
    x = apply_standardizer(model.standardizer, matrix).ravel()
    return int(x @ model.weights + model.bias >= 0.0)


def predict_svm_batch(model: LinearSvmModel, ds: Dataset) -> np.ndarray:
    if ds.mode != model.mode:
        raise ValueError("dataset mode does not match SVM model mode")
    x = _svm_features(ds, model.standardizer)
    return (x @ model.weights + model.bias >= 0.0).astype(int)
