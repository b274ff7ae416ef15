"""Randomized-signature reservoirs and Euler integration."""

import numpy as np
import pytest

from sigdetect.paths import PathSeries
from sigdetect.randsig import (
    PRESET_CRYPTO,
    PRESET_SIMULATED,
    ReservoirSpec,
    randomized_signature,
    randomized_signature_batch,
    sample_reservoir,
)


class TestSampleReservoir:
    def test_shapes_and_determinism(self):
        a = sample_reservoir(d_in=3, k=7, mean_A=0.1, var_A=0.5, seed=42)
        b = sample_reservoir(d_in=3, k=7, mean_A=0.1, var_A=0.5, seed=42)
        assert a.matrices.shape == (3, 7, 7)
        assert a.shifts.shape == (3, 7)
        assert a.initial_state.shape == (7,)
        assert np.array_equal(a.matrices, b.matrices)
        assert np.array_equal(a.initial_state, b.initial_state)

    def test_variance_interpreted_as_variance(self):
        spec = sample_reservoir(d_in=1, k=80, mean_A=0.0, var_A=4.0, seed=1)
        # entries ~ N(0, 4): sample std should be near 2, not 4
        assert abs(spec.matrices.std() - 2.0) < 0.1

    def test_zero_variance_all_zero_fields(self):
        spec = sample_reservoir(d_in=2, k=4, mean_A=0.0, var_A=0.0, mean_b=0.0, var_b=0.0, seed=0)
        assert np.all(spec.matrices == 0.0)
        assert np.all(spec.shifts == 0.0)
        # tanh(0) = 0: the state never moves
        path = PathSeries(np.random.default_rng(0).standard_normal((9, 2)))
        out = randomized_signature(spec, path)
        assert np.allclose(out, spec.initial_state)

    def test_table1_presets(self):
        assert PRESET_SIMULATED == dict(
            k=200, mean_A=0.15, var_A=0.6, mean_b=0.0, var_b=1.0, activation="tanh"
        )
        assert PRESET_CRYPTO == dict(
            k=50, mean_A=0.05, var_A=0.1, mean_b=0.0, var_b=1.0, activation="tanh"
        )

    def test_a_scale_rescales_matrices(self):
        raw = sample_reservoir(d_in=2, k=5, mean_A=0.3, var_A=0.2, seed=9)
        scaled = sample_reservoir(d_in=2, k=5, mean_A=0.3, var_A=0.2, seed=9, a_scale=0.5)
        assert np.allclose(scaled.matrices, 0.5 * raw.matrices)
        assert np.array_equal(scaled.shifts, raw.shifts)

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            sample_reservoir(d_in=1, k=2, mean_A=0.0, var_A=1.0, activation="relu")


def manual_spec(A, b, rs0, activation="tanh"):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    rs0 = np.asarray(rs0, dtype=float)
    return ReservoirSpec(
        input_dim=A.shape[0],
        reservoir_dim=A.shape[1],
        mean_A=0.0,
        var_A=0.0,
        mean_b=0.0,
        var_b=0.0,
        activation=activation,
        seed=0,
        a_scale=1.0,
        matrices=A,
        shifts=b,
        initial_state=rs0,
    )


class TestRandomizedSignature:
    def test_constant_path_returns_initial_state(self):
        spec = sample_reservoir(d_in=2, k=5, mean_A=0.2, var_A=0.3, seed=3)
        path = PathSeries(np.ones((6, 2)))
        assert np.array_equal(randomized_signature(spec, path), spec.initial_state)

    def test_single_euler_step_by_hand(self):
        # k=1, d=1, A=0, b=1, RS_0=0, one step of size 1 -> tanh(1)
        spec = manual_spec([[[0.0]]], [[1.0]], [0.0])
        path = PathSeries(np.array([0.0, 1.0]))
        out = randomized_signature(spec, path)
        assert out[0] == pytest.approx(np.tanh(1.0), abs=1e-12)
        assert out[0] == pytest.approx(0.761594, abs=1e-6)

    def test_identity_activation_telescopes(self):
        # A = 0 and identity activation collapse path dependence:
        # RS_end = RS_0 + sum_i b_i * (total increment of channel i)
        rng = np.random.default_rng(11)
        d, k = 3, 3
        A = np.zeros((d, k, k))
        b = np.eye(d)
        rs0 = rng.standard_normal(k)
        spec = manual_spec(A, b, rs0, activation="identity")
        values = rng.standard_normal((20, d))
        out = randomized_signature(spec, PathSeries(values))
        expected = rs0 + (values[-1] - values[0])
        assert np.allclose(out, expected, atol=1e-12)

    def test_determinism(self):
        spec = sample_reservoir(d_in=2, k=6, mean_A=0.1, var_A=0.4, seed=5)
        path = PathSeries(np.random.default_rng(6).standard_normal((15, 2)))
        assert np.array_equal(randomized_signature(spec, path), randomized_signature(spec, path))

    def test_additivity_over_concatenation(self):
        spec = sample_reservoir(d_in=2, k=8, mean_A=0.1, var_A=0.3, seed=7)
        values = np.random.default_rng(8).standard_normal((21, 2))
        full = randomized_signature(spec, PathSeries(values))
        head = randomized_signature(spec, PathSeries(values[:11]))
        tail = randomized_signature(spec, PathSeries(values[10:]), initial_state=head)
        assert np.allclose(full, tail, atol=1e-12)

    def test_bounded_step_growth_under_tanh(self):
        spec = sample_reservoir(d_in=2, k=10, mean_A=0.5, var_A=2.0, seed=9)
        values = np.random.default_rng(10).standard_normal((12, 2))
        states = [spec.initial_state]
        for j in range(11):
            nxt = randomized_signature(spec, PathSeries(values[j : j + 2]), initial_state=states[-1])
            step = np.abs(nxt - states[-1]).max()
            bound = np.abs(values[j + 1] - values[j]).sum()
            assert step <= bound + 1e-12
            states.append(nxt)

    def test_dimension_mismatch(self):
        spec = sample_reservoir(d_in=3, k=4, mean_A=0.1, var_A=0.2, seed=1)
        with pytest.raises(ValueError):
            randomized_signature(spec, PathSeries(np.zeros((5, 2))))

    def test_batch_matches_single(self):
        spec = sample_reservoir(d_in=2, k=6, mean_A=0.1, var_A=0.4, seed=13)
        rng = np.random.default_rng(14)
        values = rng.standard_normal((4, 9, 2))
        batch = randomized_signature_batch(spec, values)
        for i in range(4):
            single = randomized_signature(spec, PathSeries(values[i]))
            assert np.allclose(batch[i], single, atol=1e-12)


class TestSerialization:
    def test_roundtrip_regenerates_identical_fields(self):
        spec = sample_reservoir(d_in=4, k=9, mean_A=0.05, var_A=0.1, seed=21, a_scale=0.25)
        clone = ReservoirSpec.from_json(spec.to_json())
        assert np.array_equal(clone.matrices, spec.matrices)
        assert np.array_equal(clone.shifts, spec.shifts)
        assert np.array_equal(clone.initial_state, spec.initial_state)
        assert clone.a_scale == spec.a_scale
