"""Figure rendering for sweep and latency reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from dcsense.harness import LatencyReport

_MARKERS = ["o", "s", "^", "v", "d", "x"]

_AXIS_LABELS = {
    "noise_psd_dbm_hz": "Noise power density (dBm/Hz)",
    "n_su": "Number of SUs",
    "n_train": "Number of training samples",
}


def render_sweep_figure(rows: list, path: str, param_name: str | None = None) -> None:
    """Sensing error vs. the swept parameter, one curve per method."""
    methods = []
    for row in rows:
        if row["method"] not in methods:
            methods.append(row["method"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, method in enumerate(methods):
        pts = [(r["param"], r["sensing_error"]) for r in rows if r["method"] == method]
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker=_MARKERS[i % len(_MARKERS)], label=method)
    ax.set_xlabel(_AXIS_LABELS.get(param_name, param_name or "parameter"))
    ax.set_ylabel("Sensing error ($P_{FA} + P_{MD}$)")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_latency_figure(report: LatencyReport, path: str) -> None:
    """Per-method mean inference latency bar chart."""
    methods = [e["method"] for e in report.entries]
    means = [e["mean_ms"] for e in report.entries]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(methods, means)
    ax.set_ylabel("Mean inference time per decision (ms)")
    ax.grid(True, axis="y", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
