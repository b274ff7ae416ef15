"""Cryptocurrency pump-and-dump study, end to end.

Ingests labeled trade files, aggregates and encodes trade channels,
extracts windowed signature features, scores windows with an unsupervised
detector, aggregates flags to hours and evaluates against the labeled
pump-and-dump attempts with precision-recall sweeps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import detectors as det
from .errors import EmptyFile, ParseError
from .paths import PathSeries, WindowConfig, normalize_unit_interval, window_starts
from .randsig import ReservoirSpec, randomized_signature_batch
from .readout import MetricsReport
from .tensoralg import flatten_features_batch, path_signature_batch

MS_PER_HOUR = 3_600_000


@dataclass(frozen=True)
class TradeRecord:
    symbol: str
    timestamp: int  # milliseconds UNIX epoch
    side: str  # "buy" or "sell"
    price: float
    amount: float


@dataclass(frozen=True)
class PdLabel:
    symbol: str
    group: str
    timestamp: int  # milliseconds UNIX epoch
    exchange: str


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray  # (n, m)
    window_end_timestamps: np.ndarray  # (n,) int64 ms
    method: str  # "exact" or "randomized"
    symbols: tuple[str, ...]  # per-row coin tag

    def __post_init__(self):
        if len(self.rows) != len(self.window_end_timestamps) or len(self.rows) != len(self.symbols):
            raise ValueError("rows, timestamps and symbols must align")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("feature rows must be finite")


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

_TRADE_HEADER = ["symbol", "timestamp", "side", "price", "amount"]
_LABEL_HEADER = ["symbol", "group", "timestamp", "exchange"]


def load_trades(path) -> list[TradeRecord]:
    """Parse a trades CSV (header symbol,timestamp,side,price,amount) and
    return records sorted by timestamp."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} has no header")
        if header != _TRADE_HEADER:
            raise ParseError(f"expected header {','.join(_TRADE_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError("expected 5 fields", line=lineno)
            symbol, ts_raw, side, price_raw, amount_raw = row
            if side not in ("buy", "sell"):
                raise ParseError(f"invalid side {side!r}", line=lineno)
            try:
                ts = int(ts_raw)
                price = float(price_raw)
                amount = float(amount_raw)
            except ValueError:
                raise ParseError("malformed numeric field", line=lineno)
            if price <= 0 or amount <= 0:
                raise ParseError("price and amount must be positive", line=lineno)
            records.append(TradeRecord(symbol, ts, side, price, amount))
    if not records:
        raise EmptyFile(f"{path} has no data rows")
    records.sort(key=lambda r: r.timestamp)
    return records


def load_labels(path) -> list[PdLabel]:
    """Parse a labels CSV (header symbol,group,timestamp,exchange)."""
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} has no header")
        if header != _LABEL_HEADER:
            raise ParseError(f"expected header {','.join(_LABEL_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError("expected 4 fields", line=lineno)
            symbol, group, ts_raw, exchange = row
            try:
                ts = int(ts_raw)
            except ValueError:
                raise ParseError("malformed timestamp", line=lineno)
            labels.append(PdLabel(symbol, group, ts, exchange))
    if not labels:
        raise EmptyFile(f"{path} has no data rows")
    return labels


def aggregate_trades(trades: list[TradeRecord]) -> list[TradeRecord]:
    """Merge consecutive trades sharing (timestamp, side, price), summing
    their amounts; such runs are one larger trade split by the exchange."""
    out: list[TradeRecord] = []
    for trade in trades:
        if out and (
            out[-1].timestamp == trade.timestamp
            and out[-1].side == trade.side
            and out[-1].price == trade.price
        ):
            prev = out[-1]
            out[-1] = TradeRecord(
                prev.symbol, prev.timestamp, prev.side, prev.price, prev.amount + trade.amount
            )
        else:
            out.append(trade)
    return out


def build_channels(trades: list[TradeRecord], normalize: bool = True) -> PathSeries:
    """Encode trades as the 4-channel (time, return, volume, side) series.

    Returns are simple returns p_j / p_{j-1} - 1 (zero for the first
    trade), volume is price * amount, side is +0.5 buy / -0.5 sell.  All
    channels are normalized onto [0, 1] over the whole interval unless
    ``normalize`` is off.
    """
    if len(trades) < 2:
        raise ValueError("need at least 2 trades")
    ts = np.array([t.timestamp for t in trades], dtype=float)
    prices = np.array([t.price for t in trades])
    returns = np.concatenate([[0.0], prices[1:] / prices[:-1] - 1.0])
    volume = prices * np.array([t.amount for t in trades])
    side = np.array([0.5 if t.side == "buy" else -0.5 for t in trades])
    # aggregated trades can still share a millisecond across sides; nudge
    # duplicate timestamps minimally so the time channel stays increasing
    ts = _strictly_increasing(ts)
    series = PathSeries(
        np.column_stack([ts, returns, volume, side]),
        ("t", "return", "volume", "side"),
        time_channel=0,
    )
    if normalize:
        series = normalize_unit_interval(series)
    return series


def _strictly_increasing(ts: np.ndarray) -> np.ndarray:
    out = ts.copy()
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + 1e-3
    return out


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactFeatures:
    """Exact truncated signature features of the given degree."""

    degree: int = 3
    tag: str = "exact"


@dataclass(frozen=True)
class RandomizedFeatures:
    """Randomized-signature features from a sampled reservoir."""

    reservoir: ReservoirSpec
    tag: str = "randomized"


def featurize_windows(
    series: PathSeries,
    cfg: WindowConfig,
    method,
    timestamps=None,
    symbol: str = "",
    normalize_windows: bool = False,
) -> FeatureMatrix:
    """Sliding-window signature features.

    Row i holds the exact (flattened, constant dropped) or randomized
    signature of window i and is tagged with the window's last sample
    timestamp (``timestamps`` supplies raw ms when the series' time channel
    is normalized).  Clamped tail windows that duplicate an earlier start
    are dropped, leaving ceil((L - w) / o) + 1 rows.  ``normalize_windows``
    switches [0,1] normalization from per-interval to per-window.
    """
    starts = list(dict.fromkeys(window_starts(series.length, cfg)))
    w = cfg.window_size
    batch = np.stack([series.values[s : s + w] for s in starts])
    if normalize_windows:
        lo = batch.min(axis=1, keepdims=True)
        hi = batch.max(axis=1, keepdims=True)
        span = np.where(hi > lo, hi - lo, 1.0)
        batch = np.where(hi > lo, (batch - lo) / span, 0.0)
    if isinstance(method, ExactFeatures):
        rows = flatten_features_batch(path_signature_batch(batch, method.degree))
    elif isinstance(method, RandomizedFeatures):
        rows = randomized_signature_batch(method.reservoir, batch)
    else:
        raise TypeError("method must be ExactFeatures or RandomizedFeatures")
    if timestamps is None:
        if series.time_channel is None:
            raise ValueError("need timestamps when the series has no time channel")
        timestamps = series.values[:, series.time_channel]
    timestamps = np.asarray(timestamps)
    if len(timestamps) != series.length:
        raise ValueError("timestamps must align with series samples")
    ends = np.array([timestamps[s + w - 1] for s in starts], dtype=np.int64)
    return FeatureMatrix(rows, ends, method.tag, (symbol,) * len(starts))


# ---------------------------------------------------------------------------
# hourly aggregation and evaluation
# ---------------------------------------------------------------------------


def hourly_aggregate(window_flags, window_end_timestamps) -> dict[int, bool]:
    """OR-aggregate window flags into UTC hours (floor of ms / 3.6e6).

    Only hours containing at least one window appear; an hour is flagged
    iff any window ending in it is flagged.
    """
    flags = np.asarray(window_flags, dtype=bool)
    ends = np.asarray(window_end_timestamps, dtype=np.int64)
    if flags.shape != ends.shape:
        raise ValueError("flags and timestamps must align")
    out: dict[int, bool] = {}
    for flag, ts in zip(flags, ends):
        hour = int(ts // MS_PER_HOUR)
        out[hour] = out.get(hour, False) or bool(flag)
    return out


def label_hours(labels: list[PdLabel], interval_days: int) -> tuple[set, set]:
    """(positive (symbol, hour) pairs, all (symbol, hour) pairs in the
    +-interval_days/2 evaluation intervals)."""
    half_ms = int(interval_days * 24 * MS_PER_HOUR / 2)
    positives, universe = set(), set()
    for label in labels:
        hour = label.timestamp // MS_PER_HOUR
        positives.add((label.symbol, hour))
        lo = (label.timestamp - half_ms) // MS_PER_HOUR
        hi = (label.timestamp + half_ms) // MS_PER_HOUR
        for h in range(lo, hi + 1):
            universe.add((label.symbol, h))
    return positives, universe


def evaluate(
    hourly_flags: dict[tuple[str, int], bool],
    labels: list[PdLabel],
    interval_days: int,
) -> MetricsReport:
    """Confusion metrics over all hours of the labels' intervals.

    Positives are the hours containing a labeled attempt; every other hour
    in the interval counts as a negative.  Hours without windows are
    treated as unflagged.
    """
    positives, universe = label_hours(labels, interval_days)
    covered_symbols = {sym for sym, _ in hourly_flags}
    for label in labels:
        if label.symbol not in covered_symbols:
            raise ValueError(f"label {label.symbol} outside flag coverage")
    tp = fp = tn = fn = 0
    for key in universe:
        flagged = hourly_flags.get(key, False)
        positive = key in positives
        tp += flagged and positive
        fp += flagged and not positive
        tn += not flagged and not positive
        fn += not flagged and positive
    return MetricsReport(tp, fp, tn, fn)


@dataclass(frozen=True)
class EvaluationReport:
    detector: str
    feature_method: str
    interval_days: int
    sweep: tuple[dict, ...]  # {param, precision, recall, f1} per grid point
    max_f1: dict  # {value, precision, recall, param}

    def to_json(self) -> str:
        return json.dumps(
            {
                "detector": self.detector,
                "feature_method": self.feature_method,
                "interval_days": self.interval_days,
                "sweep": list(self.sweep),
                "max_f1": self.max_f1,
            },
            sort_keys=True,
        )


def _sweep_report(detector, feature_method, interval_days, points) -> EvaluationReport:
    sweep = tuple(
        {"param": param, "precision": m.precision, "recall": m.recall, "f1": m.f1}
        for param, m in points
    )
    best = max(sweep, key=lambda p: p["f1"])
    return EvaluationReport(
        detector,
        feature_method,
        interval_days,
        sweep,
        {
            "value": best["f1"],
            "precision": best["precision"],
            "recall": best["recall"],
            "param": best["param"],
        },
    )


def default_contamination_grid(n_points: int = 40) -> np.ndarray:
    return np.logspace(np.log10(0.001), np.log10(0.3), n_points)


def detector_scores(
    features: FeatureMatrix,
    detector: str,
    seed: int = 0,
    support_fraction: float = 0.75,
) -> np.ndarray:
    """Per-window anomaly scores (higher = more anomalous) for a detector."""
    if detector == "iforest":
        model = det.fit_isolation_forest(features.rows, seed=seed)
        return det.iforest_scores(model, features.rows)
    if detector == "mcd":
        model = det.fit_mcd(features.rows, support_fraction=support_fraction, seed=seed)
        return det.mahalanobis_scores(model, features.rows)
    raise ValueError("detector must be 'iforest' or 'mcd'")


def pr_sweep_detector(
    features: FeatureMatrix,
    labels: list[PdLabel],
    detector: str,
    contamination_grid=None,
    interval_days: int = 3,
    seed: int = 0,
    support_fraction: float = 0.75,
    scores=None,
) -> EvaluationReport:
    """Sweep the contamination rate for an isolation-forest or MCD detector.

    Scores are computed once (or passed in, e.g. when sweeping several
    evaluation intervals); each grid point thresholds them, aggregates the
    window flags to hours and evaluates against the labels.
    """
    if contamination_grid is None:
        contamination_grid = default_contamination_grid()
    contamination_grid = np.asarray(contamination_grid, dtype=float)
    if contamination_grid.size == 0 or np.any(
        (contamination_grid <= 0) | (contamination_grid >= 1)
    ):
        raise ValueError("contamination grid must be non-empty within (0, 1)")
    if scores is None:
        scores = detector_scores(features, detector, seed, support_fraction)
    points = []
    for contamination in contamination_grid:
        flags = det.label_outliers(scores, contamination)
        hourly = _hourly_by_symbol(flags, features)
        points.append((float(contamination), evaluate(hourly, labels, interval_days)))
    return _sweep_report(detector, features.method, interval_days, points)


def _hourly_by_symbol(flags: np.ndarray, features: FeatureMatrix) -> dict:
    hourly: dict[tuple[str, int], bool] = {}
    for flag, ts, sym in zip(flags, features.window_end_timestamps, features.symbols):
        key = (sym, int(ts // MS_PER_HOUR))
        hourly[key] = hourly.get(key, False) or bool(flag)
    return hourly


@dataclass(frozen=True)
class HourlySeries:
    """Hourly price/volume per coin for the spike benchmark."""

    symbol: str
    hours: np.ndarray  # consecutive UTC hour indices
    price: np.ndarray  # last trade price per hour, carried forward
    volume: np.ndarray  # summed price * amount per hour


def hourly_series(trades: list[TradeRecord]) -> HourlySeries:
    """Aggregate sorted trades of one coin into consecutive hourly buckets."""
    if not trades:
        raise ValueError("need at least one trade")
    ts = np.array([t.timestamp for t in trades], dtype=np.int64)
    hours_of = ts // MS_PER_HOUR
    lo, hi = int(hours_of.min()), int(hours_of.max())
    hours = np.arange(lo, hi + 1)
    price = np.zeros(len(hours))
    volume = np.zeros(len(hours))
    for trade, hour in zip(trades, hours_of):
        i = int(hour - lo)
        price[i] = trade.price  # trades are sorted; ends as last price
        volume[i] += trade.price * trade.amount
    # carry last price forward through empty hours
    last = price[0] if price[0] > 0 else trades[0].price
    for i in range(len(hours)):
        if price[i] == 0:
            price[i] = last
        last = price[i]
    return HourlySeries(trades[0].symbol, hours, price, volume)


def pr_sweep_benchmark(
    hourly: list[HourlySeries],
    labels: list[PdLabel],
    steps: int = 40,
    interval_days: int = 3,
    cfg: det.BenchmarkConfig = det.BenchmarkConfig(),
) -> EvaluationReport:
    """Sweep the spike thresholds jointly from (0, 0) to the benchmark
    configuration; fraction f maps to (f * V_spike, f * S_spike) and the
    f = 1 endpoint is always part of the sweep."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    points = []
    for f in np.linspace(0.0, 1.0, steps):
        swept = det.BenchmarkConfig(
            volume_threshold=f * cfg.volume_threshold,
            price_threshold=f * cfg.price_threshold,
            ma_window=cfg.ma_window,
        )
        flags: dict[tuple[str, int], bool] = {}
        for series in hourly:
            hour_flags = det.kamps_benchmark(series.price, series.volume, swept)
            for hour, flag in zip(series.hours, hour_flags):
                key = (series.symbol, int(hour))
                flags[key] = flags.get(key, False) or bool(flag)
        points.append((float(f), evaluate(flags, labels, interval_days)))
    return _sweep_report("benchmark", "spike", interval_days, points)
