import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from odsslab.mellin import (GeometricGrid, MellinSpectrum, dilate, forward_dmt, inverse_dmt,
                            min_transform_length, remap_coefficients, synthesize)


def direct_forward(x, grid):
    n = grid.indices
    k = np.arange(grid.N)
    return np.array([np.sum(grid.q ** (n / 2) * x * np.exp(2j * np.pi * n * kk / grid.N))
                     for kk in k])


def direct_inverse(c, grid):
    n = grid.indices
    k = np.arange(grid.N)
    return np.array([grid.q ** (-nn / 2) / grid.N * np.sum(c * np.exp(-2j * np.pi * k * nn / grid.N))
                     for nn in n])


class TestMinLength:
    def test_examples(self):
        assert min_transform_length(10, 1, math.e) == 10
        assert min_transform_length(5, 2, 2) == 1
        assert min_transform_length(0, 1, 100) == 1

    def test_rounds_up(self):
        assert min_transform_length(2.5, 1, math.e) == 3

    @pytest.mark.parametrize("lo,hi", [(0, 1), (-1, 2), (1, 0)])
    def test_bad_endpoints(self, lo, hi):
        with pytest.raises(ValueError):
            min_transform_length(1, lo, hi)


class TestGrid:
    def test_points(self):
        g = GeometricGrid(2.0, 4, -1)
        assert_allclose(g.points, [0.5, 1, 2, 4])
        assert g.Q == 16

    def test_degenerate(self):
        GeometricGrid(1.0, 1)
        with pytest.raises(ValueError):
            GeometricGrid(1.0, 3)

    def test_alias_check(self):
        with pytest.raises(ValueError):
            GeometricGrid(2.0, 2, 0, 1.0, 8.0)

    def test_for_support_floors(self):
        g = GeometricGrid.for_support(2.0, 3.0, 20.0)
        assert g.J == 1  # floor(log2 3)
        assert g.Q >= 20 / 3


class TestPair:
    def test_trivial(self):
        g = GeometricGrid(1.0, 1)
        assert_allclose(forward_dmt([2 + 1j], g).coeffs, [2 + 1j])
        assert_allclose(inverse_dmt(np.ones(1), g), [1])

    def test_direct_sums(self):
        rng = np.random.default_rng(0)
        g = GeometricGrid(1.3, 8, -3)
        x = rng.normal(size=8) + 1j * rng.normal(size=8)
        assert_allclose(forward_dmt(x, g).coeffs, direct_forward(x, g), rtol=1e-12, atol=1e-12)
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        assert_allclose(inverse_dmt(c, g), direct_inverse(c, g), rtol=1e-12, atol=1e-12)

    def test_round_trip_length8(self):
        rng = np.random.default_rng(1)
        g = GeometricGrid(1.7, 8, 2)
        x = rng.normal(size=8) + 1j * rng.normal(size=8)
        assert np.abs(inverse_dmt(forward_dmt(x, g), g) - x).max() < 1e-12 * np.abs(x).max()
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        assert np.abs(forward_dmt(inverse_dmt(c, g), g).coeffs - c).max() < 1e-12 * np.abs(c).max()

    @settings(max_examples=60, deadline=None)
    @given(q=st.floats(1.01, 3.0), N=st.integers(1, 40), J=st.integers(-10, 10),
           seed=st.integers(0, 2 ** 31))
    def test_round_trip_property(self, q, N, J, seed):
        # the sqrt(q**n) weights cost about log10(Q)/2 digits; keep Q <= 1e6
        N = max(1, min(N, int(math.log(1e6) / math.log(q))))
        rng = np.random.default_rng(seed)
        g = GeometricGrid(q, N, J)
        x = rng.normal(size=N) + 1j * rng.normal(size=N)
        y = inverse_dmt(forward_dmt(x, g), g)
        assert np.linalg.norm(y - x) / np.linalg.norm(x) < 1e-10

    def test_parseval(self):
        rng = np.random.default_rng(2)
        g = GeometricGrid(1.5, 12, -4)
        x = rng.normal(size=12) + 1j * rng.normal(size=12)
        c = forward_dmt(x, g).coeffs
        assert_allclose(np.sum(g.points * np.abs(x) ** 2), np.sum(np.abs(c) ** 2) / g.N,
                        rtol=1e-12)

    def test_length_mismatch(self):
        g = GeometricGrid(2.0, 4)
        with pytest.raises(ValueError):
            forward_dmt(np.ones(3), g)
        with pytest.raises(ValueError):
            inverse_dmt(MellinSpectrum(np.ones(5)), g)


class TestScaleProperties:
    @settings(max_examples=40, deadline=None)
    @given(q=st.floats(1.05, 2.5), N=st.integers(2, 24), s=st.integers(-5, 5),
           seed=st.integers(0, 2 ** 31))
    def test_dilation_only_changes_phase(self, q, N, s, seed):
        rng = np.random.default_rng(seed)
        g = GeometricGrid(q, N, 0)
        x = rng.normal(size=N) + 1j * rng.normal(size=N)
        c0 = forward_dmt(x, g).coeffs
        c1 = forward_dmt(dilate(x, g, s), g).coeffs
        assert_allclose(np.abs(c1), np.abs(c0), rtol=1e-10, atol=1e-10 * np.abs(c0).max())
        k = np.arange(N)
        assert_allclose(c1, c0 * np.exp(-2j * np.pi * k * s / N), atol=1e-10 * np.abs(c0).max())

    def test_one_step_by_hand(self):
        # manual one step dilation of a dilatocycled sequence
        q, N = 2.0, 4
        g = GeometricGrid(q, N, 0)
        x = np.array([1.0, 2.0, -1.0, 0.5j])
        n = np.arange(N)
        w = q ** (n / 2) * x
        w_shift = np.r_[w[1:], w[:1]]
        y = w_shift / q ** (n / 2)
        assert_allclose(dilate(x, g, 1), y)

    def test_band_limited_signal_reconstructs(self):
        g = GeometricGrid(1.2, 16, -3)
        spec = {k: complex(k + 1, -k) for k in range(5, 5 + 16)}  # span N - 1
        x = synthesize(spec, g)
        got = remap_coefficients(forward_dmt(x, g), 5)
        assert_allclose(got, [spec[k] for k in range(5, 21)], atol=1e-10)

    def test_aliased_signal_does_not(self):
        g = GeometricGrid(1.2, 16, 0)
        spec = {k: 1.0 + 0j for k in range(0, 18)}  # wider than 1/ln q
        x = synthesize(spec, g)
        got = remap_coefficients(forward_dmt(x, g), 0)
        assert np.abs(got - np.ones(16)).max() > 0.5
