"""Command-line front end orchestrating the two studies.

Subcommands
-----------
simulate        write the synthetic dataset and streak-histogram CSVs
run-synthetic   fit the logistic readout on exact/randomized features
run-crypto      full pump-and-dump pipeline with PR sweeps
featurize       dump windowed signature features for a trades file
evaluate        sweep one detector on a previously saved feature file

All randomness flows from the config seeds; reruns with identical inputs
produce byte-identical report files.  Reports are accumulated in memory
and written only after every computation succeeded, so a failing run
leaves no partial outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import SigdetectError
from .paths import WindowConfig
from .pipeline import (
    ExactFeatures,
    FeatureMatrix,
    RandomizedFeatures,
    aggregate_trades,
    build_channels,
    detector_scores,
    featurize_windows,
    hourly_series,
    load_labels,
    load_trades,
    pr_sweep_benchmark,
    pr_sweep_detector,
)
from .randsig import (
    PRESET_CRYPTO,
    PRESET_SIMULATED,
    randomized_signature_batch,
    sample_reservoir,
)
from .readout import (
    classification_metrics,
    fit_logistic,
    pr_points,
    predict_proba,
    quantile_accuracy,
    roc_points,
)
from .synth import SynthConfig, make_dataset, streak_histogram
from .tensoralg import flatten_features_batch, path_signature_batch


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated knobs shared by the subcommands; flags override file values."""

    study: str = "synthetic"
    methods: tuple[str, ...] = ("exact", "randomized")
    degree: int = 3
    reservoir_seed: int = 123
    detector_seed: int = 0
    seed: int = 7
    n_paths: int = 4000
    train_fraction: float = 0.8
    window_size: int = 100
    window_offset: int = 5
    intervals: tuple[int, ...] = (3,)
    detectors: tuple[str, ...] = ("iforest", "mcd", "benchmark")
    support_fraction: float = 0.75
    out_dir: str = "reports"
    trades_path: str = ""
    labels_path: str = ""

    def __post_init__(self):
        if self.study not in ("synthetic", "crypto"):
            raise ValueError(f"unknown study {self.study!r}")
        for m in self.methods:
            if m not in ("exact", "randomized"):
                raise ValueError(f"unknown method {m!r}")
        for d in self.detectors:
            if d not in ("iforest", "mcd", "benchmark"):
                raise ValueError(f"unknown detector {d!r}")
        for iv in self.intervals:
            if iv not in (3, 6, 14):
                raise ValueError(f"interval must be one of 3/6/14, got {iv}")
        if self.degree < 1:
            raise ValueError("degree must be positive")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")

    @staticmethod
    def load(path, **overrides) -> "ExperimentConfig":
        """Read a JSON config file; unknown keys are rejected."""
        known = {f.name for f in fields(ExperimentConfig)}
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("methods", "detectors", "intervals"):
            if key in doc:
                doc[key] = tuple(doc[key])
        cfg = ExperimentConfig(**doc)
        return replace(cfg, **overrides) if overrides else cfg


# ---------------------------------------------------------------------------
# synthetic study
# ---------------------------------------------------------------------------

# reservoir matrices are rescaled by 1/k so the tanh pre-activations stay in
# the responsive range; the raw draw saturates the activation at these
# reservoir sizes and the terminal state carries no usable signal
def simulated_reservoir(d_in: int = 3, seed: int = 123):
    k = PRESET_SIMULATED["k"]
    return sample_reservoir(d_in=d_in, seed=seed, a_scale=1.0 / k, **PRESET_SIMULATED)


def crypto_reservoir(d_in: int = 4, seed: int = 123):
    k = PRESET_CRYPTO["k"]
    return sample_reservoir(d_in=d_in, seed=seed, a_scale=1.0 / k, **PRESET_CRYPTO)


def _standardize(train: np.ndarray, test: np.ndarray):
    mu, sd = train.mean(axis=0), train.std(axis=0)
    sd = np.where(sd < 1e-12, 1.0, sd)
    return (train - mu) / sd, (test - mu) / sd


def run_synthetic_study(
    cfg: SynthConfig,
    methods=("exact", "randomized"),
    degree: int = 3,
    reservoir_seed: int = 123,
    train_fraction: float = 0.8,
):
    """Fit the logistic readout per feature method and collect accuracies.

    Returns (report dict, curves dict); curves maps method -> (roc, pr)
    point lists for CSV export.
    """
    split = make_dataset(cfg, train_fraction)
    train = np.stack([s.values for s in split.train_series])
    test = np.stack([s.values for s in split.test_series])
    report: dict = {
        "config": {
            "n_paths": cfg.n_paths,
            "steps": cfg.steps,
            "mu": cfg.mu,
            "sigma": cfg.sigma,
            "s0": cfg.s0,
            "horizon": cfg.horizon,
            "pattern_len": cfg.pattern_len,
            "seed": cfg.seed,
            "train_fraction": train_fraction,
            "degree": degree,
            "reservoir_seed": reservoir_seed,
        },
        "methods": {},
    }
    curves: dict = {}
    for method in methods:
        if method == "exact":
            f_train = flatten_features_batch(path_signature_batch(train, degree))
            f_test = flatten_features_batch(path_signature_batch(test, degree))
        else:
            reservoir = simulated_reservoir(train.shape[2], reservoir_seed)
            f_train = randomized_signature_batch(reservoir, train)
            f_test = randomized_signature_batch(reservoir, test)
        f_train, f_test = _standardize(f_train, f_test)
        model = fit_logistic(f_train, split.train_labels, max_iters=2000)
        probs = predict_proba(model, f_test)
        metrics = classification_metrics(split.test_labels == 1, probs >= 0.5)
        deciles = quantile_accuracy(split.test_labels, probs, bins=10)
        report["methods"][method] = {
            "mean_accuracy": metrics.accuracy,
            "bottom10_accuracy": float(deciles[0]),
            "top10_accuracy": float(deciles[-1]),
            "decile_accuracies": [float(a) for a in deciles],
            "precision": metrics.precision,
            "recall": metrics.recall,
            "f1": metrics.f1,
        }
        curves[method] = (
            roc_points(split.test_labels, probs),
            pr_points(split.test_labels, probs),
        )
    accs = [report["methods"][m]["mean_accuracy"] for m in methods]
    if len(accs) == 2:
        report["accuracy_gap"] = abs(accs[0] - accs[1])
    return report, curves


# ---------------------------------------------------------------------------
# crypto study
# ---------------------------------------------------------------------------


def _concat_features(mats: list[FeatureMatrix]) -> FeatureMatrix:
    return FeatureMatrix(
        np.concatenate([m.rows for m in mats]),
        np.concatenate([m.window_end_timestamps for m in mats]),
        mats[0].method,
        tuple(sym for m in mats for sym in m.symbols),
    )


def _group_by_symbol(trades):
    grouped: dict[str, list] = {}
    for trade in trades:
        grouped.setdefault(trade.symbol, []).append(trade)
    return grouped


def run_crypto_study(cfg: ExperimentConfig):
    """Full pipeline: ingest, featurize, sweep every requested detector.

    Returns (reports, curves): reports maps report name -> EvaluationReport,
    curves maps report name -> PR point rows for CSV export.
    """
    trades = aggregate_trades(load_trades(cfg.trades_path))
    labels = load_labels(cfg.labels_path)
    window = WindowConfig(cfg.window_size, cfg.window_offset)
    grouped = _group_by_symbol(trades)

    feature_sets: dict[str, FeatureMatrix] = {}
    for method in cfg.methods:
        mats = []
        for symbol, symbol_trades in grouped.items():
            try:
                channels = build_channels(symbol_trades)
                raw_ts = np.array([t.timestamp for t in symbol_trades], dtype=np.int64)
                if method == "exact":
                    extractor = ExactFeatures(cfg.degree)
                else:
                    extractor = RandomizedFeatures(crypto_reservoir(4, cfg.reservoir_seed))
                mats.append(
                    featurize_windows(channels, window, extractor, timestamps=raw_ts, symbol=symbol)
                )
            except (ValueError, SigdetectError) as exc:
                raise RuntimeError(f"coin {symbol}: {exc}") from exc
        feature_sets[method] = _concat_features(mats)
    hourly = [hourly_series(grouped[sym]) for sym in sorted(grouped)]

    # scores do not depend on the evaluation interval; compute them once
    scores = {
        (detector, method): detector_scores(
            feature_sets[method], detector, cfg.detector_seed, cfg.support_fraction
        )
        for detector in cfg.detectors
        if detector != "benchmark"
        for method in cfg.methods
    }
    reports: dict[str, object] = {}
    for interval in cfg.intervals:
        for detector in cfg.detectors:
            if detector == "benchmark":
                key = f"benchmark_{interval}d"
                reports[key] = pr_sweep_benchmark(hourly, labels, interval_days=interval)
                continue
            for method in cfg.methods:
                key = f"{detector}_{method}_{interval}d"
                reports[key] = pr_sweep_detector(
                    feature_sets[method],
                    labels,
                    detector,
                    interval_days=interval,
                    seed=cfg.detector_seed,
                    support_fraction=cfg.support_fraction,
                    scores=scores[(detector, method)],
                )
    curves = {
        key: [(p["param"], p["recall"], p["precision"], p["f1"]) for p in rep.sweep]
        for key, rep in reports.items()
    }
    return reports, curves


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _csv_bytes(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write_all(out_dir: str, outputs: dict[str, str]):
    """Write every file at once; nothing is written if assembling failed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in outputs.items():
        (out / name).write_text(content, encoding="utf-8")
        print(f"wrote {out / name}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig) -> int:
    synth = SynthConfig(n_paths=cfg.n_paths, seed=cfg.seed)
    split = make_dataset(synth, cfg.train_fraction)
    outputs = {}
    for name, series, labels in [
        ("train.csv", split.train_series, split.train_labels),
        ("test.csv", split.test_series, split.test_labels),
    ]:
        rows = [
            [int(label)] + [repr(v) for v in s.values[:, 1]]
            for s, label in zip(series, labels)
        ]
        header = ["label"] + [f"x{j}" for j in range(split.train_series[0].length)]
        outputs[name] = _csv_bytes(header, rows)
    hist = streak_histogram(split.train_series + split.test_series, channel=1)
    outputs["streaks.csv"] = _csv_bytes(
        ["run_length", "count"], sorted(hist.items())
    )
    _write_all(cfg.out_dir, outputs)
    return 0


def cmd_run_synthetic(cfg: ExperimentConfig) -> int:
    synth = SynthConfig(n_paths=cfg.n_paths, seed=cfg.seed)
    report, curves = run_synthetic_study(
        synth, cfg.methods, cfg.degree, cfg.reservoir_seed, cfg.train_fraction
    )
    outputs = {"synthetic_report.json": json.dumps(report, sort_keys=True, indent=2) + "\n"}
    for method, (roc, pr) in curves.items():
        outputs[f"roc_{method}.csv"] = _csv_bytes(["fp_rate", "tp_rate"], roc)
        outputs[f"pr_{method}.csv"] = _csv_bytes(["recall", "precision"], pr)
    _write_all(cfg.out_dir, outputs)
    return 0


def cmd_run_crypto(cfg: ExperimentConfig) -> int:
    if not cfg.trades_path or not cfg.labels_path:
        raise ValueError("run-crypto requires --trades and --labels")
    reports, curves = run_crypto_study(cfg)
    outputs = {}
    for key, rep in reports.items():
        outputs[f"{key}.json"] = rep.to_json() + "\n"
        outputs[f"{key}_pr.csv"] = _csv_bytes(
            ["param", "recall", "precision", "f1"], curves[key]
        )
    _write_all(cfg.out_dir, outputs)
    return 0


def cmd_featurize(cfg: ExperimentConfig) -> int:
    if not cfg.trades_path:
        raise ValueError("featurize requires --trades")
    trades = aggregate_trades(load_trades(cfg.trades_path))
    window = WindowConfig(cfg.window_size, cfg.window_offset)
    method = cfg.methods[0]
    mats = []
    for symbol, symbol_trades in _group_by_symbol(trades).items():
        channels = build_channels(symbol_trades)
        raw_ts = np.array([t.timestamp for t in symbol_trades], dtype=np.int64)
        extractor = (
            ExactFeatures(cfg.degree)
            if method == "exact"
            else RandomizedFeatures(crypto_reservoir(4, cfg.reservoir_seed))
        )
        mats.append(featurize_windows(channels, window, extractor, timestamps=raw_ts, symbol=symbol))
    matrix = _concat_features(mats)
    header = ["symbol", "window_end_ms"] + [f"f{j}" for j in range(matrix.rows.shape[1])]
    rows = [
        [sym, int(ts)] + [repr(v) for v in row]
        for sym, ts, row in zip(matrix.symbols, matrix.window_end_timestamps, matrix.rows)
    ]
    _write_all(cfg.out_dir, {f"features_{method}.csv": _csv_bytes(header, rows)})
    return 0


def cmd_evaluate(cfg: ExperimentConfig) -> int:
    if not cfg.trades_path or not cfg.labels_path:
        raise ValueError("evaluate requires --trades and --labels")
    detector = cfg.detectors[0]
    sub = replace(cfg, detectors=(detector,))
    reports, curves = run_crypto_study(sub)
    outputs = {}
    for key, rep in reports.items():
        outputs[f"{key}.json"] = rep.to_json() + "\n"
    _write_all(cfg.out_dir, outputs)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigdetect",
        description="Signature-feature market anomaly detection studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "run-synthetic", "run-crypto", "featurize", "evaluate"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (flags override)")
        p.add_argument("--seed", type=int)
        p.add_argument("--paths", type=int, dest="n_paths")
        p.add_argument("--method", choices=["exact", "randomized"])
        p.add_argument("--detector", choices=["iforest", "mcd", "benchmark"])
        p.add_argument("--interval", type=int, choices=[3, 6, 14])
        p.add_argument("--trades", dest="trades_path")
        p.add_argument("--labels", dest="labels_path")
        p.add_argument("--degree", type=int)
        p.add_argument("--out", dest="out_dir")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for key in ("seed", "n_paths", "trades_path", "labels_path", "out_dir", "degree"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.method:
        overrides["methods"] = (args.method,)
    if args.detector:
        overrides["detectors"] = (args.detector,)
    if args.interval:
        overrides["intervals"] = (args.interval,)
    if args.config:
        return ExperimentConfig.load(args.config, **overrides)
    return ExperimentConfig(**overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "run-synthetic": cmd_run_synthetic,
        "run-crypto": cmd_run_crypto,
        "featurize": cmd_featurize,
        "evaluate": cmd_evaluate,
    }
    try:
        cfg = _config_from_args(args)
        return handlers[args.command](cfg)
    except (SigdetectError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
