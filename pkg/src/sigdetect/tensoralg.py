"""Exact truncated signatures of piecewise-linear paths.

A truncated signature of degree N over a d-letter alphabet is stored level
by level, each level n being a flat array of d^n coefficients in
lexicographic multi-index order.  Signatures of linear segments are tensor
exponentials of the increment; signatures of whole paths are obtained by
combining segment exponentials with the tensor (Chen) product, which is
exact for piecewise-linear paths.

``signature_via_ode`` integrates the controlled ODE
dY = pi_N(Y) (x) dX with explicit Euler steps and serves purely as an
independent cross-check of ``path_signature``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CountOverflow, InsufficientData
from .paths import PathSeries


@dataclass(frozen=True)
class TruncatedTensor:
    """Degree-N truncated tensor over a d-dimensional alphabet.

    ``levels[n]`` is a flat array of the d^n level-n coefficients in
    lexicographic multi-index order; ``levels[0]`` holds the scalar part.
    """

    alphabet_size: int
    degree: int
    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be >= 1")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if len(self.levels) != self.degree + 1:
            raise ValueError("need degree + 1 level blocks")
        levels = []
        for n, block in enumerate(self.levels):
            block = np.asarray(block, dtype=float).reshape(-1)
            if block.size != self.alphabet_size**n:
                raise ValueError(f"level {n} must hold d^{n} coefficients")
            levels.append(block)
        object.__setattr__(self, "levels", tuple(levels))

    def level(self, n: int) -> np.ndarray:
        return self.levels[n]


def unit_tensor(d: int, N: int) -> TruncatedTensor:
    """Identity of the truncated tensor algebra: (1, 0, ..., 0)."""
    levels = tuple(np.zeros(d**n) for n in range(N + 1))
    levels[0][0] = 1.0
    return TruncatedTensor(d, N, levels)


def coeff_count(d: int, N: int) -> int:
    """Number of coefficients of a degree-N signature: sum_{j<=N} d^j."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if N < 0:
        raise ValueError("N must be >= 0")
    total = (N + 1) if d == 1 else (d ** (N + 1) - 1) // (d - 1)
    if total > np.iinfo(np.int64).max:
        raise CountOverflow(f"coefficient count for d={d}, N={N} overflows int64")
    return total


def segment_signature(increment, N: int) -> TruncatedTensor:
    """Truncated tensor exponential of a linear segment.

    The coefficient of multi-index (i1..in) is (1/n!) prod_j increment[i_j].
    """
    inc = np.asarray(increment, dtype=float).reshape(-1)
    d = inc.size
    levels = [np.ones(1)]
    for n in range(1, N + 1):
        levels.append(np.multiply.outer(levels[-1], inc).reshape(-1) / n)
    return TruncatedTensor(d, N, tuple(levels))


def chen_product(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Tensor product in T^N(V): level j is sum_k a_k (x) b_{j-k}.

    Levels above N are discarded (canonical projection).
    """
    if a.alphabet_size != b.alphabet_size or a.degree != b.degree:
        raise ValueError("operands must share alphabet size and degree")
    d, N = a.alphabet_size, a.degree
    levels = []
    for j in range(N + 1):
        block = np.zeros(d**j)
        for k in range(j + 1):
            block += np.multiply.outer(a.levels[k], b.levels[j - k]).reshape(-1)
        levels.append(block)
    return TruncatedTensor(d, N, tuple(levels))


def path_signature(series: PathSeries, N: int) -> TruncatedTensor:
    """Exact degree-N signature of a piecewise-linear path."""
    if series.length < 2:
        raise InsufficientData("need at least 2 samples")
    sig = path_signature_batch(series.values[None, :, :], N)
    return TruncatedTensor(series.channels, N, tuple(lvl[0] for lvl in sig))


def path_signature_batch(values: np.ndarray, N: int) -> list[np.ndarray]:
    """Signatures of a batch of equal-length paths.

    ``values`` has shape (B, L, d); returns one array per level, level n of
    shape (B, d^n).  Equivalent to calling :func:`path_signature` per path
    but folds the Chen products over segments with vectorized outer
    products across the batch.
    """
    values = np.asarray(values, dtype=float)
    B, L, d = values.shape
    if L < 2:
        raise InsufficientData("need at least 2 samples")
    increments = np.diff(values, axis=1)  # (B, L-1, d)
    levels = [np.ones((B, 1))] + [np.zeros((B, d**n)) for n in range(1, N + 1)]
    for s in range(L - 1):
        inc = increments[:, s, :]  # (B, d)
        # exponential of this segment, batched
        exp_levels = [np.ones((B, 1))]
        for n in range(1, N + 1):
            exp_levels.append(
                (exp_levels[-1][:, :, None] * inc[:, None, :]).reshape(B, -1) / n
            )
        new_levels = [levels[0]]
        for j in range(1, N + 1):
            block = np.zeros((B, d**j))
            for k in range(j + 1):
                block += (
                    levels[k][:, :, None] * exp_levels[j - k][:, None, :]
                ).reshape(B, -1)
            new_levels.append(block)
        levels = new_levels
    return levels


def signature_via_ode(
    series: PathSeries, N: int, steps_per_segment: int = 100
) -> TruncatedTensor:
    """Euler integration of dY = pi_N(Y) (x) dX with Y_0 = (1, 0, ...).

    Independent oracle for :func:`path_signature`; converges to it as
    ``steps_per_segment`` grows.
    """
    if series.length < 2:
        raise InsufficientData("need at least 2 samples")
    if steps_per_segment < 1:
        raise ValueError("steps_per_segment must be >= 1")
    d = series.channels
    levels = [np.ones(1)] + [np.zeros(d**n) for n in range(1, N + 1)]
    for inc in np.diff(series.values, axis=0):
        dx = inc / steps_per_segment
        for _ in range(steps_per_segment):
            # (Y (x) dx)_j = Y_{j-1} (x) dx; level 0 is constant
            for j in range(N, 0, -1):
                levels[j] = levels[j] + np.multiply.outer(levels[j - 1], dx).reshape(-1)
    return TruncatedTensor(d, N, tuple(levels))


def flatten_features(t: TruncatedTensor, include_constant: bool = False) -> np.ndarray:
    """Concatenate levels 1..N (plus level 0 when flagged) into one vector."""
    start = 0 if include_constant else 1
    if t.degree + 1 <= start:
        return np.zeros(0)
    return np.concatenate(t.levels[start:])


def flatten_features_batch(levels: list[np.ndarray], include_constant: bool = False) -> np.ndarray:
    """Batched counterpart of :func:`flatten_features` for
    :func:`path_signature_batch` output; returns shape (B, m)."""
    start = 0 if include_constant else 1
    return np.concatenate(levels[start:], axis=1)


def total_variation(series: PathSeries) -> float:
    """Total variation of a piecewise-linear path: the sum of Euclidean
    segment increment norms (the partition supremum is attained on the
    sample partition)."""
    if series.length < 2:
        return 0.0
    increments = np.diff(series.values, axis=0)
    return float(np.linalg.norm(increments, axis=1).sum())
