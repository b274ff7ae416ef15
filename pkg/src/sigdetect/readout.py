"""Logistic readout and classification metrics.

The readout maps feature vectors (exact or randomized signatures) to class
probabilities; metric helpers cover confusion counts, ROC/PR curves and
per-quantile accuracies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    trained: bool = False


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total if total else 0.0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(weights, bias, features, labels, l2):
    """Mean cross-entropy + (l2/2)||w||^2 and its gradient."""
    z = features @ weights + bias
    p = _sigmoid(z)
    eps = 1e-12
    loss = -np.mean(labels * np.log(p + eps) + (1 - labels) * np.log(1 - p + eps))
    loss += 0.5 * l2 * weights @ weights
    resid = p - labels
    grad_w = features.T @ resid / len(labels) + l2 * weights
    grad_b = resid.mean()
    return loss, grad_w, grad_b


def fit_logistic(
    features: np.ndarray,
    labels: np.ndarray,
    l2: float = 0.0,
    max_iters: int = 500,
    tol: float = 1e-6,
) -> LogisticModel:
    """Full-batch gradient descent with backtracking line search.

    Deterministic from zero initialization; stops when the gradient
    infinity-norm drops below ``tol``.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.ndim != 2 or len(features) != len(labels):
        raise ValueError("features must be n x m with matching labels")
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise ValueError("labels must be binary")
    n, m = features.shape
    w = np.zeros(m)
    b = 0.0
    step = 1.0
    loss, gw, gb = logistic_loss_grad(w, b, features, labels, l2)
    for _ in range(max_iters):
        gnorm = max(np.abs(gw).max(initial=0.0), abs(gb))
        if gnorm < tol:
            break
        # backtracking: halve until sufficient decrease (Armijo, c = 1e-4)
        gsq = gw @ gw + gb * gb
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = logistic_loss_grad(w_new, b_new, features, labels, l2)
            if loss_new <= loss - 1e-4 * step * gsq or step < 1e-12:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        step = min(step * 2.0, 1e6)
    return LogisticModel(w, b, trained=True)


def predict_proba(model: LogisticModel, features: np.ndarray) -> np.ndarray:
    """Per-row sigmoid(w . x + b); labels follow by rounding at 0.5."""
    if not model.trained:
        raise ValueError("model is not trained")
    features = np.asarray(features, dtype=float)
    if features.shape[1] != len(model.weights):
        raise ValueError("feature dimension mismatch")
    return _sigmoid(features @ model.weights + model.bias)


def classification_metrics(labels, predicted) -> MetricsReport:
    labels = np.asarray(labels).astype(bool)
    predicted = np.asarray(predicted).astype(bool)
    if labels.shape != predicted.shape:
        raise ValueError("labels and predictions must have equal length")
    tp = int(np.sum(labels & predicted))
    fp = int(np.sum(~labels & predicted))
    tn = int(np.sum(~labels & ~predicted))
    fn = int(np.sum(labels & ~predicted))
    return MetricsReport(tp, fp, tn, fn)


def _threshold_sweep(labels, scores):
    """Cumulative (tp, fp) at each distinct descending score threshold."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(~sorted_labels)
    # keep the last index of every tied score block
    distinct = np.nonzero(np.diff(sorted_scores, append=-np.inf))[0]
    return labels, tp[distinct], fp[distinct]


def roc_points(labels, scores) -> list[tuple[float, float]]:
    """(fp-rate, tp-rate) per descending threshold, ending at (1, 1)."""
    labels, tp, fp = _threshold_sweep(labels, scores)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("roc_points needs both classes")
    points = [(0.0, 0.0)]
    points += [(f / n_neg, t / n_pos) for t, f in zip(tp, fp)]
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return points


def pr_points(labels, scores) -> list[tuple[float, float]]:
    """(recall, precision) per descending threshold."""
    labels, tp, fp = _threshold_sweep(labels, scores)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise DegenerateLabels("pr_points needs at least one positive label")
    return [(t / n_pos, t / (t + f) if t + f else 0.0) for t, f in zip(tp, fp)]


def max_f1(points: list[tuple[float, float]]) -> tuple[float, float, float]:
    """(f1, recall, precision) of the best point on a PR curve."""
    best = (0.0, 0.0, 0.0)
    for r, p in points:
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        if f1 > best[0]:
            best = (f1, r, p)
    return best


def quantile_accuracy(labels, scores, bins: int = 10) -> np.ndarray:
    """Rounding-accuracy per score-sorted bin of (near-)equal size."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=float)
    n = len(labels)
    if n < bins:
        raise ValueError("need at least one sample per bin")
    order = np.argsort(scores, kind="stable")
    edges = np.linspace(0, n, bins + 1).astype(int)
    accs = np.empty(bins)
    for i in range(bins):
        idx = order[edges[i] : edges[i + 1]]
        predicted = scores[idx] >= 0.5
        accs[i] = np.mean(predicted == labels[idx])
    return accs
