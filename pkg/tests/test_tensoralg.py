"""Truncated signatures: closed forms, Chen's identity and the ODE oracle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigdetect.errors import CountOverflow, InsufficientData
from sigdetect.paths import PathSeries
from sigdetect.tensoralg import (
    TruncatedTensor,
    chen_product,
    coeff_count,
    flatten_features,
    flatten_features_batch,
    path_signature,
    path_signature_batch,
    segment_signature,
    signature_via_ode,
    total_variation,
    unit_tensor,
)


def corner_path():
    """(0,0) -> (1,0) -> (1,1): the classic two-segment L-shape."""
    return PathSeries(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))


def random_path(rng, d, length):
    return PathSeries(rng.standard_normal((length, d)))


class TestCoeffCount:
    def test_values(self):
        assert coeff_count(3, 2) == 13
        assert coeff_count(1, 5) == 6
        assert coeff_count(2, 3) == 15

    def test_overflow(self):
        with pytest.raises(CountOverflow):
            coeff_count(10, 30)

    def test_invalid(self):
        with pytest.raises(ValueError):
            coeff_count(0, 2)


class TestSegmentSignature:
    def test_one_dimensional_closed_form(self):
        # 1-d increment a: level n must be a^n / n!
        sig = segment_signature([2.0], 4)
        expected = [1.0, 2.0, 2.0, 4.0 / 3.0, 2.0 / 3.0]
        for n, value in enumerate(expected):
            assert sig.level(n)[0] == pytest.approx(value, rel=1e-12)

    def test_zero_increment_is_unit(self):
        sig = segment_signature([0.0, 0.0], 3)
        unit = unit_tensor(2, 3)
        for n in range(4):
            assert np.array_equal(sig.level(n), unit.level(n))


class TestPathSignature:
    def test_corner_path_levels(self):
        sig = path_signature(corner_path(), 2)
        assert np.allclose(sig.level(1), [1.0, 1.0])
        # lexicographic order (11, 12, 21, 22)
        assert np.allclose(sig.level(2), [0.5, 1.0, 0.0, 0.5])

    def test_levy_area(self):
        lvl2 = path_signature(corner_path(), 2).level(2).reshape(2, 2)
        area = 0.5 * (lvl2[0, 1] - lvl2[1, 0])
        assert area == pytest.approx(0.5)

    def test_corner_level2_matches_quadrature(self):
        # independent oracle: S^{ij} = int (x^i(t) - x^i(0)) dx^j(t) via a
        # fine Riemann sum over the arc-length parametrization
        m = 4000
        t = np.linspace(0.0, 2.0, m + 1)
        x = np.column_stack([np.minimum(t, 1.0), np.maximum(t - 1.0, 0.0)])
        mid = 0.5 * (x[1:] + x[:-1])
        dx = np.diff(x, axis=0)
        oracle = np.einsum("ti,tj->ij", mid - x[0], dx)
        sig = path_signature(corner_path(), 2).level(2).reshape(2, 2)
        assert np.allclose(sig, oracle, atol=1e-6)

    def test_batch_matches_per_path(self):
        rng = np.random.default_rng(3)
        paths = [random_path(rng, 3, 10) for _ in range(5)]
        batch = path_signature_batch(np.stack([p.values for p in paths]), 3)
        for i, p in enumerate(paths):
            single = path_signature(p, 3)
            for n in range(4):
                assert np.allclose(batch[n][i], single.level(n), rtol=1e-12)

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            path_signature(PathSeries(np.zeros((1, 2))), 2)

    def test_time_reversal_inverts_level1(self):
        rng = np.random.default_rng(4)
        p = random_path(rng, 2, 12)
        fwd = path_signature(p, 1).level(1)
        bwd = path_signature(PathSeries(p.values[::-1].copy()), 1).level(1)
        assert np.allclose(fwd, -bwd)


class TestChenProduct:
    def test_unit_is_identity(self):
        rng = np.random.default_rng(5)
        sig = path_signature(random_path(rng, 2, 8), 3)
        unit = unit_tensor(2, 3)
        for prod in (chen_product(unit, sig), chen_product(sig, unit)):
            for n in range(4):
                assert np.allclose(prod.level(n), sig.level(n))

    def test_concatenation_identity_fixed_seed(self):
        rng = np.random.default_rng(6)
        for d in (1, 2, 3):
            for _ in range(10):
                values = rng.standard_normal((15, d))
                cut = int(rng.integers(1, 14))
                full = path_signature(PathSeries(values), 4)
                left = path_signature(PathSeries(values[: cut + 1]), 4)
                right = path_signature(PathSeries(values[cut:]), 4)
                prod = chen_product(left, right)
                for n in range(5):
                    assert np.allclose(prod.level(n), full.level(n), rtol=1e-9, atol=1e-12)

    def test_mismatched_operands(self):
        with pytest.raises(ValueError):
            chen_product(unit_tensor(2, 3), unit_tensor(3, 3))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4))
    def test_refinement_invariance(self, seed, d, degree):
        # inserting a midpoint sample must not change the signature
        rng = np.random.default_rng(seed)
        values = rng.standard_normal((6, d))
        i = int(rng.integers(0, 5))
        midpoint = 0.5 * (values[i] + values[i + 1])
        refined = np.insert(values, i + 1, midpoint, axis=0)
        a = path_signature(PathSeries(values), degree)
        b = path_signature(PathSeries(refined), degree)
        for n in range(degree + 1):
            assert np.allclose(a.level(n), b.level(n), rtol=1e-9, atol=1e-12)


class TestSignatureViaOde:
    def test_error_decreases_with_steps(self):
        rng = np.random.default_rng(7)
        p = random_path(rng, 2, 5)
        exact = path_signature(p, 3)
        errors = []
        for steps in (10, 100, 1000):
            approx = signature_via_ode(p, 3, steps)
            errors.append(
                max(
                    np.abs(approx.level(n) - exact.level(n)).max()
                    for n in range(1, 4)
                )
            )
        assert errors[0] > errors[1] > errors[2]

    def test_converges_to_exact(self):
        p = corner_path()
        approx = signature_via_ode(p, 2, 2000)
        exact = path_signature(p, 2)
        assert np.allclose(approx.level(2), exact.level(2), atol=2e-3)


class TestFlatten:
    def test_column_count_without_constant(self):
        rng = np.random.default_rng(8)
        sig = path_signature(random_path(rng, 4, 6), 2)
        assert flatten_features(sig).shape == (20,)
        assert flatten_features(sig, include_constant=True).shape == (21,)

    def test_batch_flatten(self):
        batch = path_signature_batch(np.zeros((3, 4, 2)), 2)
        assert flatten_features_batch(batch).shape == (3, 6)


class TestTruncatedTensor:
    def test_level_size_validation(self):
        with pytest.raises(ValueError):
            TruncatedTensor(2, 1, (np.ones(1), np.ones(3)))


def test_total_variation_corner():
    assert total_variation(corner_path()) == pytest.approx(2.0)
