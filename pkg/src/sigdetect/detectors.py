"""Unsupervised outlier scoring.

Implements isolation forests and the Minimum Covariance Determinant
estimator from scratch (both are the paper-level algorithms under test,
not generic plumbing), plus the price/volume spike benchmark used as the
comparison baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, SingularCovariance


# ---------------------------------------------------------------------------
# isolation forest
# ---------------------------------------------------------------------------


def avg_path_length_c(n: int) -> float:
    """Average unsuccessful-search path length c(n) = 2H(n-1) - 2(n-1)/n.

    Defined as 0 for n <= 1 (a singleton is fully isolated).
    """
    if n <= 1:
        return 0.0
    harmonic = sum(1.0 / k for k in range(1, n))
    return 2.0 * harmonic - 2.0 * (n - 1) / n


@dataclass
class _Node:
    # internal: (feature, value, left, right); leaf: size only
    feature: int = -1
    value: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    size: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class IsolationForestModel:
    n_trees: int
    subsample_size: int
    height_limit: int
    trees: list[_Node]
    seed: int


def _build_tree(X: np.ndarray, depth: int, limit: int, rng) -> _Node:
    n = len(X)
    if n <= 1 or depth >= limit or np.all(X == X[0]):
        return _Node(size=n)
    feature = int(rng.integers(X.shape[1]))
    lo, hi = X[:, feature].min(), X[:, feature].max()
    if lo == hi:
        # unsplittable on this feature; retry on a random other one
        spread = X.max(axis=0) - X.min(axis=0)
        candidates = np.nonzero(spread > 0)[0]
        feature = int(rng.choice(candidates))
        lo, hi = X[:, feature].min(), X[:, feature].max()
    value = float(rng.uniform(lo, hi))
    mask = X[:, feature] < value
    if not mask.any() or mask.all():
        return _Node(size=n)
    return _Node(
        feature=feature,
        value=value,
        left=_build_tree(X[mask], depth + 1, limit, rng),
        right=_build_tree(X[~mask], depth + 1, limit, rng),
        size=n,
    )


def fit_isolation_forest(
    X: np.ndarray, n_trees: int = 100, subsample_size: int = 256, seed: int = 0
) -> IsolationForestModel:
    """Build ``n_trees`` random partition trees on uniform subsamples.

    Each node splits on a uniformly random feature at a uniform value
    between that feature's min and max; recursion stops at singletons,
    duplicate-only nodes or ceil(log2(subsample_size)).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("X must be n x m with m >= 1")
    if len(X) < 2:
        raise ValueError("need at least 2 samples")
    psi = min(subsample_size, len(X))
    limit = math.ceil(math.log2(psi)) if psi > 1 else 0
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        idx = rng.choice(len(X), size=psi, replace=False)
        trees.append(_build_tree(X[idx], 0, limit, rng))
    return IsolationForestModel(n_trees, psi, limit, trees, seed)


def _tree_depths(node: _Node, X: np.ndarray, idx: np.ndarray, depth: int, out: np.ndarray):
    if node.is_leaf:
        out[idx] = depth + avg_path_length_c(node.size)
        return
    mask = X[idx, node.feature] < node.value
    _tree_depths(node.left, X, idx[mask], depth + 1, out)
    _tree_depths(node.right, X, idx[~mask], depth + 1, out)


def iforest_scores(model: IsolationForestModel, X: np.ndarray) -> np.ndarray:
    """Anomaly scores s(x, psi) = 2^(-E(h(x)) / c(psi)) for each row.

    Early-stopped leaves contribute depth + c(leaf size), the standard
    unbiasedness correction; higher scores indicate anomalies.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    depths = np.zeros((model.n_trees, len(X)))
    all_idx = np.arange(len(X))
    for t, tree in enumerate(model.trees):
        _tree_depths(tree, X, all_idx, 0, depths[t])
    expected = depths.mean(axis=0)
    return 2.0 ** (-expected / avg_path_length_c(model.subsample_size))


def iforest_score(model: IsolationForestModel, x) -> float:
    """Score of a single point."""
    return float(iforest_scores(model, np.asarray(x, dtype=float)[None, :])[0])


def _node_to_dict(node: _Node) -> dict:
    if node.is_leaf:
        return {"size": node.size}
    return {
        "feature": node.feature,
        "value": node.value,
        "size": node.size,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc: dict) -> _Node:
    if "feature" not in doc:
        return _Node(size=doc["size"])
    return _Node(
        feature=doc["feature"],
        value=doc["value"],
        size=doc["size"],
        left=_node_from_dict(doc["left"]),
        right=_node_from_dict(doc["right"]),
    )


def iforest_to_json(model: IsolationForestModel) -> str:
    """Serialize with explicit trees so scores stay bit-stable."""
    return json.dumps(
        {
            "n_trees": model.n_trees,
            "subsample_size": model.subsample_size,
            "height_limit": model.height_limit,
            "seed": model.seed,
            "trees": [_node_to_dict(t) for t in model.trees],
        },
        sort_keys=True,
    )


def iforest_from_json(doc: str) -> IsolationForestModel:
    cfg = json.loads(doc)
    return IsolationForestModel(
        cfg["n_trees"],
        cfg["subsample_size"],
        cfg["height_limit"],
        [_node_from_dict(t) for t in cfg["trees"]],
        cfg["seed"],
    )


# ---------------------------------------------------------------------------
# minimum covariance determinant
# ---------------------------------------------------------------------------


@dataclass
class McdModel:
    support_fraction: float
    location: np.ndarray
    scatter: np.ndarray
    support: np.ndarray  # indices of the minimal-determinant subset
    seed: int
    determinant_trace: list[list[float]] = field(default_factory=list)


def _subset_moments(X: np.ndarray, idx: np.ndarray):
    sub = X[idx]
    mu = sub.mean(axis=0)
    centered = sub - mu
    sigma = centered.T @ centered / len(sub)
    return mu, sigma


def _mahalanobis_sq(X: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(sigma)
    y = np.linalg.solve(chol, (X - mu).T)
    return np.einsum("ij,ij->j", y, y)


def fit_mcd(
    X: np.ndarray, support_fraction: float = 0.75, n_starts: int = 50, seed: int = 0
) -> McdModel:
    """FastMCD-style search: random subsets refined by C-steps.

    Each start draws a random ceil(n * gamma)-subset, then repeatedly
    recomputes its moments and reselects the points of smallest
    Mahalanobis distance until the determinant stops decreasing; the
    subset of minimal determinant wins.
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    if not 0 < support_fraction <= 1:
        raise ValueError("support_fraction must lie in (0, 1]")
    if n <= m * m:
        raise InsufficientSamples(f"need n > m^2 samples, got n={n}, m={m}")
    h = math.ceil(n * support_fraction)
    if h <= m:
        raise InsufficientSamples(f"subset size {h} must exceed dimension {m}")

    full_idx = np.arange(n)
    if support_fraction == 1:
        mu, sigma = _subset_moments(X, full_idx)
        _require_pd(sigma)
        return McdModel(support_fraction, mu, sigma, full_idx, seed, [])

    rng = np.random.default_rng(seed)
    best = None
    traces = []
    for _ in range(n_starts):
        idx = np.sort(rng.choice(n, size=h, replace=False))
        mu, sigma = _subset_moments(X, idx)
        det = _log_determinant(sigma)
        if det is None:
            traces.append([])
            continue
        trace = [det]
        while True:
            try:
                d2 = _mahalanobis_sq(X, mu, sigma)
            except np.linalg.LinAlgError:
                break
            new_idx = np.sort(np.argsort(d2, kind="stable")[:h])
            new_mu, new_sigma = _subset_moments(X, new_idx)
            new_det = _log_determinant(new_sigma)
            if new_det is None or new_det >= det - 1e-12:
                break
            idx, mu, sigma, det = new_idx, new_mu, new_sigma, new_det
            trace.append(det)
        if best is None or det < best[0]:
            best = (det, idx)
        traces.append(trace)
    if best is None:
        raise SingularCovariance("no start produced a positive-definite scatter")
    _, idx = best
    mu, sigma = _subset_moments(X, idx)
    _require_pd(sigma)
    return McdModel(support_fraction, mu, sigma, idx, seed, traces)


def _log_determinant(sigma: np.ndarray) -> float | None:
    """Log-determinant of a positive-definite matrix, None otherwise.

    Working on the log scale keeps the C-step comparison stable for the
    tiny determinants typical of near-collinear signature features.
    """
    sign, logdet = np.linalg.slogdet(sigma)
    return float(logdet) if sign > 0 else None


def _require_pd(sigma: np.ndarray):
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("scatter matrix is not positive definite") from exc


def mahalanobis_scores(model: McdModel, X: np.ndarray) -> np.ndarray:
    """Squared Mahalanobis distance to the robust location, per row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    try:
        return _mahalanobis_sq(X, model.location, model.scatter)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("scatter matrix is not positive definite") from exc


def mcd_to_json(model: McdModel) -> str:
    return json.dumps(
        {
            "support_fraction": model.support_fraction,
            "seed": model.seed,
            "location": model.location.tolist(),
            "scatter": model.scatter.tolist(),
            "support": model.support.tolist(),
        },
        sort_keys=True,
    )


# ---------------------------------------------------------------------------
# thresholding and the spike benchmark
# ---------------------------------------------------------------------------


def label_outliers(scores, contamination: float, higher_is_anomalous: bool = True) -> np.ndarray:
    """Flag exactly ceil(n * contamination) most-anomalous samples.

    Ties are broken by lower index so reports are reproducible.
    """
    scores = np.asarray(scores, dtype=float)
    if not 0 < contamination < 1:
        raise ValueError("contamination must lie in (0, 1)")
    n = len(scores)
    n_flag = math.ceil(n * contamination)
    keys = -scores if higher_is_anomalous else scores
    order = np.argsort(keys, kind="stable")
    flags = np.zeros(n, dtype=bool)
    flags[order[:n_flag]] = True
    return flags


@dataclass(frozen=True)
class BenchmarkConfig:
    """Spike thresholds in percent of the trailing moving average."""

    volume_threshold: float = 300.0
    price_threshold: float = 105.0
    ma_window: int = 12

    def __post_init__(self):
        if self.volume_threshold < 0 or self.price_threshold < 0:
            raise ValueError("thresholds must be non-negative")
        if self.ma_window < 1:
            raise ValueError("ma_window must be >= 1")


def kamps_benchmark(hourly_price, hourly_volume, cfg: BenchmarkConfig) -> np.ndarray:
    """Flag hours whose volume AND price exceed threshold * trailing MA.

    The moving average covers the previous ``ma_window`` hours (current
    hour excluded); the first ``ma_window`` hours are never flagged.
    """
    price = np.asarray(hourly_price, dtype=float)
    volume = np.asarray(hourly_volume, dtype=float)
    if price.shape != volume.shape:
        raise ValueError("price and volume series must be aligned")
    n = len(price)
    if n < cfg.ma_window + 1:
        raise ValueError("series shorter than ma_window + 1")
    flags = np.zeros(n, dtype=bool)
    cum_p = np.concatenate([[0.0], np.cumsum(price)])
    cum_v = np.concatenate([[0.0], np.cumsum(volume)])
    w = cfg.ma_window
    for t in range(w, n):
        ma_p = (cum_p[t] - cum_p[t - w]) / w
        ma_v = (cum_v[t] - cum_v[t - w]) / w
        flags[t] = volume[t] > cfg.volume_threshold / 100.0 * ma_v and (
            price[t] > cfg.price_threshold / 100.0 * ma_p
        )
    return flags
