"""Randomized-signature features.

The randomized signature of a path X is the terminal state of the
controlled ODE

    dRS_t = sum_i sigma(A_i RS_t + b_i) dX^i_t,

with random affine vector fields (A_i, b_i) sampled once and then frozen.
Integration uses one forward Euler step per observed sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = {
    "tanh": np.tanh,
    "identity": lambda x: x,
}


@dataclass(frozen=True)
class ReservoirSpec:
    """Sampled random vector fields plus integration metadata.

    ``matrices`` has shape (d_in, k, k), ``shifts`` (d_in, k).  The spec is
    fully determined by (seed, hyperparameters); matrices are regenerated
    deterministically on deserialization.
    """

    input_dim: int
    reservoir_dim: int
    mean_A: float
    var_A: float
    mean_b: float
    var_b: float
    activation: str
    seed: int
    a_scale: float
    matrices: np.ndarray = field(repr=False)
    shifts: np.ndarray = field(repr=False)
    initial_state: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        for name, arr, shape in [
            ("matrices", self.matrices, (self.input_dim, self.reservoir_dim, self.reservoir_dim)),
            ("shifts", self.shifts, (self.input_dim, self.reservoir_dim)),
            ("initial_state", self.initial_state, (self.reservoir_dim,)),
        ]:
            if arr.shape != shape or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite with shape {shape}")

    def to_json(self) -> str:
        """Serialize seed and hyperparameters only."""
        return json.dumps(
            {
                "input_dim": self.input_dim,
                "reservoir_dim": self.reservoir_dim,
                "mean_A": self.mean_A,
                "var_A": self.var_A,
                "mean_b": self.mean_b,
                "var_b": self.var_b,
                "activation": self.activation,
                "seed": self.seed,
                "a_scale": self.a_scale,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(doc: str) -> "ReservoirSpec":
        cfg = json.loads(doc)
        return sample_reservoir(
            d_in=cfg["input_dim"],
            k=cfg["reservoir_dim"],
            mean_A=cfg["mean_A"],
            var_A=cfg["var_A"],
            mean_b=cfg["mean_b"],
            var_b=cfg["var_b"],
            activation=cfg["activation"],
            seed=cfg["seed"],
            a_scale=cfg.get("a_scale", 1.0),
        )


# hyperparameters used for the two studies (activation tanh, mean_b 0, var_b 1)
PRESET_SIMULATED = dict(k=200, mean_A=0.15, var_A=0.6, mean_b=0.0, var_b=1.0, activation="tanh")
PRESET_CRYPTO = dict(k=50, mean_A=0.05, var_A=0.1, mean_b=0.0, var_b=1.0, activation="tanh")


def sample_reservoir(
    d_in: int,
    k: int,
    mean_A: float,
    var_A: float,
    mean_b: float = 0.0,
    var_b: float = 1.0,
    activation: str = "tanh",
    seed: int = 0,
    a_scale: float = 1.0,
) -> ReservoirSpec:
    """Sample i.i.d. Gaussian vector fields, fully determined by ``seed``.

    A entries ~ N(mean_A, var_A), b entries ~ N(mean_b, var_b); the initial
    state is i.i.d. standard normal (the var_* arguments are variances, so
    sampling scales by their square roots).

    ``a_scale`` multiplies the sampled matrices after the draw.  Setting it
    to 1/k keeps the pre-activations A_i.RS inside tanh's responsive range
    for large reservoirs; at the default 1.0 the draw is used as-is.
    """
    if k < 1 or d_in < 1:
        raise ValueError("dimensions must be positive")
    if var_A < 0 or var_b < 0:
        raise ValueError("variances must be non-negative")
    rng = np.random.default_rng(seed)
    A = rng.normal(mean_A, np.sqrt(var_A), size=(d_in, k, k)) * a_scale
    b = rng.normal(mean_b, np.sqrt(var_b), size=(d_in, k))
    rs0 = rng.standard_normal(k)
    return ReservoirSpec(d_in, k, mean_A, var_A, mean_b, var_b, activation, seed, a_scale, A, b, rs0)


def randomized_signature(spec: ReservoirSpec, series, initial_state=None) -> np.ndarray:
    """Terminal reservoir state after one Euler step per sample.

    RS_{j+1} = RS_j + sum_i sigma(A_i RS_j + b_i) * (X^i_{j+1} - X^i_j).
    ``initial_state`` overrides the spec's RS_0 (used to continue a run).
    """
    values = np.asarray(series.values if hasattr(series, "values") else series, dtype=float)
    if values.ndim != 2 or values.shape[1] != spec.input_dim:
        raise ValueError(f"series must have {spec.input_dim} channels")
    if values.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    out = randomized_signature_batch(spec, values[None, :, :], initial_state)
    return out[0]


def randomized_signature_batch(spec: ReservoirSpec, values: np.ndarray, initial_state=None) -> np.ndarray:
    """Randomized signatures of a batch of equal-length paths.

    ``values`` has shape (B, L, d_in); returns terminal states (B, k).
    The Euler recursion is evaluated for all paths simultaneously; the
    stacked (d_in * k, k) matrix turns the per-channel matvecs into one
    matmul per step.
    """
    values = np.asarray(values, dtype=float)
    B, L, d = values.shape
    if d != spec.input_dim:
        raise ValueError(f"paths must have {spec.input_dim} channels")
    k = spec.reservoir_dim
    sigma = ACTIVATIONS[spec.activation]
    A_flat = spec.matrices.reshape(d * k, k)  # rows grouped by channel
    b_flat = spec.shifts.reshape(d * k)
    rs0 = spec.initial_state if initial_state is None else np.asarray(initial_state, dtype=float)
    state = np.broadcast_to(rs0, (B, k)).astype(float).copy()
    increments = np.diff(values, axis=1)  # (B, L-1, d)
    for j in range(L - 1):
        pre = state @ A_flat.T + b_flat  # (B, d*k)
        act = sigma(pre).reshape(B, d, k)
        state = state + np.einsum("bik,bi->bk", act, increments[:, j, :])
    return state
