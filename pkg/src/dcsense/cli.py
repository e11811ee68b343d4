"""Command-line interface: generate / train / eval / sweep / bench."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from dcsense import baselines, dcs, harness
from dcsense.checkpoint import load_model, save_model
from dcsense.config import ConfigError, ScenarioConfig, load_config_file
from dcsense.dataset import (
    DatasetFormatError,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from dcsense.dcs import ArchConfig, CnnModel, TrainConfig
from dcsense.harness import SweepSpec, effective_gamma_dbm
from dcsense.sensing import MODE_HD, MODE_SD
from dcsense.streams import subseed


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (scenario/train/sweep sections)")
    p.add_argument("--seed", type=int, help="root seed; overrides the scenario seed")
    p.add_argument("--mode", choices=["sd", "hd"], default="sd", help="sensing report type")
    p.add_argument("--out", help="output path")
    p.add_argument(
        "--gamma-policy",
        choices=[harness.GAMMA_FIXED, harness.GAMMA_NOISE_FLOOR],
        default=None,
        help="hard-decision threshold policy (default: fixed for dataset "
        "generation, noise_floor for sweeps)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcsense",
        description="Cooperative spectrum sensing lab: simulate, train, benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a labeled sensing dataset")
    _add_common(p)
    p.add_argument("--n-samples", type=int, default=200)

    p = sub.add_parser("train", help="train the CNN fusion model")
    _add_common(p)
    p.add_argument("--data", help="training dataset file (generated when omitted)")
    p.add_argument("--n-samples", type=int, default=200, help="training set size when generating")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_common(p)
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--data", help="evaluation dataset file (generated when omitted)")
    p.add_argument("--n-samples", type=int, default=2000, help="evaluation set size when generating")

    p = sub.add_parser("sweep", help="run a figure-reproduction sweep")
    _add_common(p)
    p.add_argument("--no-figure", action="store_true", help="skip the PNG next to the CSV")

    p = sub.add_parser("bench", help="benchmark per-decision inference latency")
    _add_common(p)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--n-train", type=int, default=100)
    p.add_argument("--no-figure", action="store_true")

    return parser


def _load_sections(args) -> dict:
    if args.config is None:
        return {}
    return load_config_file(args.config)


def _scenario(sections: dict, args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_dict(sections.get("scenario", {}))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _train_config(sections: dict) -> TrainConfig:
    return TrainConfig(**sections.get("train", {}))


def _arch_config(sections: dict) -> ArchConfig:
    raw = dict(sections.get("arch", {}))
    for key in ("conv_depths", "fc_widths"):
        if key in raw:
            raw[key] = tuple(raw[key])
    return ArchConfig(**raw)


def _mode(args) -> str:
    return MODE_SD if args.mode == "sd" else MODE_HD


def _gamma(cfg: ScenarioConfig, args, default_policy: str) -> float:
    policy = args.gamma_policy or default_policy
    return effective_gamma_dbm(cfg, policy)


def _require_out(args) -> str:
    if not args.out:
        raise ConfigError("--out is required for this command")
    return args.out


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def _cmd_generate(args) -> int:
    sections = _load_sections(args)
    cfg = _scenario(sections, args)
    ds = generate_dataset(
        cfg,
        args.n_samples,
        _mode(args),
        subseed(cfg.seed, "generate"),
        gamma_dbm=_gamma(cfg, args, harness.GAMMA_FIXED),
    )
    out = _require_out(args)
    save_dataset(ds, out)
    print(f"wrote {len(ds)} {ds.mode} samples to {out}")
    return 0


def _cmd_train(args) -> int:
    sections = _load_sections(args)
    cfg = _scenario(sections, args)
    tc = _train_config(sections)
    arch = _arch_config(sections)
    if args.data:
        train_set = load_dataset(args.data)
    else:
        train_set = generate_dataset(
            cfg,
            args.n_samples,
            _mode(args),
            subseed(cfg.seed, "train-data"),
            gamma_dbm=_gamma(cfg, args, harness.GAMMA_FIXED),
        )
    tc = dataclasses.replace(tc, seed=cfg.seed if args.seed is None else args.seed)
    model, history = dcs.train_permutation_ensemble(train_set, tc, arch)
    out = _require_out(args)
    save_model(model, out)
    print(
        f"trained on {len(train_set)} {train_set.mode} samples; "
        f"best validation accuracy {history['best_val_accuracy']:.4f} "
        f"(permutation {history['permutation_index']}); checkpoint: {out}"
    )
    return 0


def _metrics_line(m: harness.Metrics) -> str:
    def fmt(x, valid):
        return f"{x:.6f}" if valid else "n/a"

    return (
        f"p_fa={fmt(m.p_fa, m.p_fa_valid)} p_md={fmt(m.p_md, m.p_md_valid)} "
        f"sensing_error={fmt(m.sensing_error, m.p_fa_valid and m.p_md_valid)} "
        f"n_h0={m.n_h0} n_h1={m.n_h1}"
    )


def _cmd_eval(args) -> int:
    sections = _load_sections(args)
    cfg = _scenario(sections, args)
    model = load_model(args.model)
    if args.data:
        eval_set = load_dataset(args.data)
    else:
        mode = model.mode if isinstance(model, (CnnModel, baselines.LinearSvmModel)) else MODE_HD
        eval_set = generate_dataset(
            cfg,
            args.n_samples,
            mode,
            subseed(cfg.seed, "eval-data"),
            gamma_dbm=_gamma(cfg, args, harness.GAMMA_FIXED),
        )
    if isinstance(model, CnnModel):
        decisions = dcs.predict_batch(model, eval_set)
    elif isinstance(model, baselines.KonRule):
        decisions = baselines.predict_kon_batch(model, eval_set)
    else:
        decisions = baselines.predict_svm_batch(model, eval_set)
    metrics = harness.metrics_from_decisions(decisions, eval_set.labels())
    print(_metrics_line(metrics))
    return 0


def _sweep_spec(sections: dict, args) -> SweepSpec:
    raw = sections.get("sweep")
    if not raw:
        raise ConfigError("sweep command needs a 'sweep' section in the config file")
    cfg = _scenario(sections, args)
    kwargs = dict(raw)
    kwargs.setdefault("param", None)
    if kwargs["param"] is None or "values" not in kwargs:
        raise ConfigError("sweep section must define 'param' and 'values'")
    if "methods" in kwargs:
        kwargs["methods"] = tuple(kwargs["methods"])
    if args.gamma_policy:
        kwargs["gamma_policy"] = args.gamma_policy
    return SweepSpec(
        scenario=cfg,
        train=_train_config(sections),
        arch=_arch_config(sections),
        seed=cfg.seed,
        **kwargs,
    )


def _cmd_sweep(args) -> int:
    sections = _load_sections(args)
    spec = _sweep_spec(sections, args)
    rows = harness.run_sweep(spec)
    out = _require_out(args)
    harness.write_sweep_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    if not args.no_figure:
        from dcsense.plotting import render_sweep_figure

        fig_path = _figure_path(out)
        render_sweep_figure(rows, fig_path, spec.param)
        print(f"wrote figure to {fig_path}")
    return 0


def _cmd_bench(args) -> int:
    sections = _load_sections(args)
    cfg = _scenario(sections, args)
    arch = _arch_config(sections)
    tc = _train_config(sections)
    # Short training: bench measures inference, not fit quality.
    tc = dataclasses.replace(tc, epochs=min(tc.epochs, 30), n_permutations=1, seed=cfg.seed)
    gamma = _gamma(cfg, args, harness.GAMMA_NOISE_FLOOR)
    train_sd = generate_dataset(cfg, args.n_train, MODE_SD, subseed(cfg.seed, "bench-train"))
    eval_sd = generate_dataset(cfg, 200, MODE_SD, subseed(cfg.seed, "bench-eval"))
    train_hd = harness._to_hd(train_sd, gamma)
    eval_hd = harness._to_hd(eval_sd, gamma)
    model, _ = dcs.train_permutation_ensemble(train_sd, tc, arch)
    kon = baselines.fit_kon(train_hd)
    svm = baselines.fit_linear_svm_cv(train_sd, seed=cfg.seed)
    predictors = {
        harness.METHOD_DCS_SD: lambda m: dcs.predict(model, m),
        harness.METHOD_KON: lambda m: baselines.predict_kon(kon, m),
        harness.METHOD_SVM_SD: lambda m: baselines.predict_svm(svm, m),
    }
    sets = {harness.METHOD_KON: eval_hd}
    report_entries = []
    for name, fn in predictors.items():
        rep = harness.bench_latency({name: fn}, sets.get(name, eval_sd), args.warmup, args.iters)
        report_entries.extend(rep.entries)
    report = harness.LatencyReport(entries=report_entries)
    out = _require_out(args)
    harness.write_latency_csv(report, out)
    for e in report.entries:
        print(
            f"{e['method']}: mean {e['mean_ms']:.3f} ms, median {e['median_ms']:.3f} ms, "
            f"p95 {e['p95_ms']:.3f} ms"
        )
    if not args.no_figure:
        from dcsense.plotting import render_latency_figure

        render_latency_figure(report, _figure_path(out))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DatasetFormatError, FileNotFoundError, ValueError) as exc:
        print(f"dcsense {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
