import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from odsslab.channel import (ChannelSpec, PathSet, ResamplerConfig, add_noise, apply_channel,
                             calibrate_noise, draw_paths, omega_convolve, rational_approx,
                             read_pathset, realize_paths, write_pathset)

FS = 1000.0


def test_signal(n=1500, fmax=0.3, seed=0, n_tones=25):
    """Band-limited complex test signal with tapered ends, plus its analytic form."""
    rng = np.random.default_rng(seed)
    f = rng.uniform(-fmax, fmax, n_tones) * FS
    a = rng.normal(size=n_tones) + 1j * rng.normal(size=n_tones)
    T = n / FS

    def x(t):
        t = np.asarray(t, dtype=float)
        env = np.exp(-((t - T / 2) / (T / 10)) ** 2)
        return env * (np.exp(2j * np.pi * np.outer(t, f)) @ a)

    return x(np.arange(n) / FS), x


test_signal.__test__ = False


def analytic_channel(x, paths, f_c=0.0):
    """Closed form of the path model acting on an analytic baseband function."""
    def y(t):
        t = np.asarray(t, dtype=float)
        out = 0
        for g, tau, a in paths:
            out = out + g * x(a * (t - tau)) * np.exp(2j * np.pi * f_c * ((a - 1) * t - a * tau))
        return out
    return y


class TestRational:
    def test_simple(self):
        assert rational_approx(1.5) == (3, 2)
        assert rational_approx(1.0) == (1, 1)

    def test_tolerance(self):
        p, q = rational_approx(1.000734, 1e-5)
        assert abs(p / q - 1.000734) <= 1e-5 * 1.000734
        assert q <= 10 ** 6

    def test_cap(self):
        with pytest.raises(ValueError):
            rational_approx(math.pi, 1e-15, 100)


class TestDraw:
    def test_determinism(self):
        s = ChannelSpec(0.01, 1.001, 20)
        a, b = draw_paths(s, 7), draw_paths(s, 7)
        assert np.array_equal(a.gains, b.gains) and np.array_equal(a.scales, b.scales)

    def test_laws(self):
        s = ChannelSpec(0.01, 1.001, 20)
        p = draw_paths(s, 3)
        assert p.in_spec(0.01, 1.001)
        assert np.all(p.delays > 0)

    def test_no_doppler(self):
        p = draw_paths(ChannelSpec(0.01, 1.0, 5), 1)
        assert np.all(p.scales == 1.0)

    def test_gain_power(self):
        p = draw_paths(ChannelSpec(0.01, 1.001, 10000), 11)
        assert abs(np.mean(np.abs(p.gains) ** 2) - 1) < 0.05

    def test_common_random_numbers(self):
        a = draw_paths(ChannelSpec(0.01, 1.0005, 6), 4)
        b = draw_paths(ChannelSpec(0.01, 1.001, 6), 4)
        assert np.array_equal(a.gains, b.gains)
        assert np.all(np.sign(a.scales - 1) == np.sign(b.scales - 1))


class TestApply:
    def test_identity(self):
        x, _ = test_signal()
        y = apply_channel(x, PathSet.single(), ResamplerConfig(), Fs=FS)
        assert np.abs(y[:len(x)] - x).max() < 1e-9

    def test_on_grid_delay(self):
        x, _ = test_signal()
        y = apply_channel(x, PathSet.single(1.0, 37 / FS, 1.0), ResamplerConfig(), Fs=FS)
        assert np.abs(y[37:37 + len(x)] - x).max() < 1e-9
        assert np.abs(y[:37]).max() < 1e-9

    def test_fine_grid_delay_matches_analytic(self):
        x, xf = test_signal()
        tau = 37.375 / FS  # three fine-grid steps past an integer
        y = apply_channel(x, PathSet.single(1.0, tau, 1.0), ResamplerConfig(), Fs=FS)
        t = np.arange(len(y)) / FS
        assert np.abs(y - xf(t - tau)).max() < 1e-6 * np.abs(x).max()

    def test_doppler_tone(self):
        Fs = 1280.0
        t = np.arange(1280) / Fs
        s = np.exp(2j * np.pi * 100 * t)
        y = apply_channel(s, PathSet.single(1.0, 0.0, 1.001), ResamplerConfig(), 12800.0, Fs)
        n = 1 << 20
        f = np.fft.fftfreq(n, 1 / Fs)
        peak = f[np.argmax(np.abs(np.fft.fft(y, n)))]
        assert abs(peak - (100 * 1.001 + 12.8)) < 0.05

    def test_against_analytic_model(self):
        x, xf = test_signal()
        paths = PathSet([0.7, -0.2 + 0.5j], [0.0123, 0.0031], [1.0007, 0.9991])
        cfg = ResamplerConfig(round_delay=False, rational_tol=1e-12)
        y = apply_channel(x, paths, cfg, 300.0, FS)
        real = realize_paths(paths, cfg, FS)
        ref = analytic_channel(xf, real, 300.0)(np.arange(len(y)) / FS)
        assert np.abs(y - ref).max() < 1e-5 * np.abs(x).max()

    def test_linearity_and_superposition(self):
        x1, _ = test_signal(seed=1)
        x2, _ = test_signal(seed=2)
        p = draw_paths(ChannelSpec(0.01, 1.001, 4), 5)
        cfg = ResamplerConfig()
        a, b = 0.3 - 1j, 2.0
        lhs = apply_channel(a * x1 + b * x2, p, cfg, 500.0, FS)
        rhs = a * apply_channel(x1, p, cfg, 500.0, FS) + b * apply_channel(x2, p, cfg, 500.0, FS)
        assert np.abs(lhs - rhs).max() < 1e-10 * np.abs(lhs).max()
        n = len(lhs)
        parts = sum(apply_channel(x1, PathSet.single(g, d, s), cfg, 500.0, FS, n_out=n)
                    for g, d, s in p)
        assert np.abs(apply_channel(x1, p, cfg, 500.0, FS, n_out=n) - parts).max() < 1e-10

    def test_columns_match_single_calls(self):
        x1, _ = test_signal(seed=1)
        x2, _ = test_signal(seed=2)
        p = draw_paths(ChannelSpec(0.01, 1.001, 3), 6)
        both = apply_channel(np.stack([x1, x2], 1), p, ResamplerConfig(), 0.0, FS)
        assert np.array_equal(both[:, 1], apply_channel(x2, p, ResamplerConfig(), 0.0, FS))

    @pytest.mark.parametrize("sqrt_alpha", [False, True])
    def test_energy(self, sqrt_alpha):
        x, _ = test_signal(fmax=0.2)
        a = 1.001
        cfg = ResamplerConfig(sqrt_alpha=sqrt_alpha)
        y = apply_channel(x, PathSet.single(1.0, 0.004, a), cfg, 0.0, FS)
        a_hat = realize_paths(PathSet.single(1.0, 0.004, a), cfg, FS).scales[0]
        ratio = np.sum(np.abs(y) ** 2) / np.sum(np.abs(x) ** 2)
        expect = 1.0 if sqrt_alpha else 1 / a_hat
        assert abs(ratio / expect - 1) < 1e-6

    def test_determinism(self):
        x, _ = test_signal()
        p = draw_paths(ChannelSpec(0.01, 1.001, 5), 9)
        a = apply_channel(x, p, ResamplerConfig(), 200.0, FS)
        b = apply_channel(x, p, ResamplerConfig(), 200.0, FS)
        assert np.array_equal(a, b)

    def test_output_holds_all_energy(self):
        x, _ = test_signal()
        p = PathSet.single(1.0, 0.05, 0.999)
        y = apply_channel(x, p, ResamplerConfig(), 0.0, FS)
        assert len(y) >= len(x) / 0.999 + 0.05 * FS


class TestOmega:
    def test_identity(self):
        h1 = PathSet([1 + 1j, 0.5], [0.01, 0.002], [1.001, 0.9995])
        h = omega_convolve(PathSet.single(), h1)
        assert_allclose(h.gains, h1.gains)
        assert_allclose(h.delays, h1.delays)
        assert_allclose(h.scales, h1.scales)

    def test_single_pair(self):
        h = omega_convolve(PathSet.single(2.0, 0.01, 1.002), PathSet.single(1j, 0.004, 0.999))
        assert_allclose(h.gains, [2j])
        assert_allclose(h.delays, [0.01 + 0.004 / 1.002])
        assert h.scales[0] == 1.002 * 0.999

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), P1=st.integers(1, 3), P2=st.integers(1, 3))
    def test_cascade_analytic(self, seed, P1, P2):
        rng = np.random.default_rng(seed)

        def rand(P):
            return PathSet(rng.normal(size=P) + 1j * rng.normal(size=P),
                           rng.uniform(0, 0.01, P), rng.uniform(1 / 1.001, 1.001, P))

        h1, h2 = rand(P1), rand(P2)
        _, xf = test_signal()
        t = np.linspace(0, 1.6, 2001)
        for f_c in (0.0, 750.0):
            casc = analytic_channel(analytic_channel(xf, h1, f_c), h2, f_c)(t)
            comb = analytic_channel(xf, omega_convolve(h2, h1), f_c)(t)
            assert np.abs(casc - comb).max() < 1e-10 * max(1.0, np.abs(casc).max())

    @settings(max_examples=12, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), P1=st.integers(1, 3), P2=st.integers(1, 3))
    def test_cascade_emulated(self, seed, P1, P2):
        rng = np.random.default_rng(seed)
        choices = np.array([999, 1000, 1001, 1003]) / 1000

        def rand(P):
            return PathSet(rng.normal(size=P) + 1j * rng.normal(size=P),
                           rng.uniform(0, 0.01, P), rng.choice(choices, P))

        h1, h2 = rand(P1), rand(P2)
        x, _ = test_signal()
        cfg = ResamplerConfig(round_delay=False, rational_tol=1e-12)
        for f_c in (0.0, 750.0):
            n = int(len(x) / 0.999 + 0.03 * FS) + 40
            v = apply_channel(x, h1, cfg, f_c, FS, n_out=n)
            casc = apply_channel(v, h2, cfg, f_c, FS, n_out=n)
            comb = apply_channel(x, omega_convolve(h2, h1), cfg, f_c, FS, n_out=n)
            assert np.abs(casc - comb).max() < 1e-3 * np.abs(casc).max()


class TestNoise:
    def test_orthonormal_bank(self):
        G = np.eye(50)[:, :10]
        assert_allclose(calibrate_noise(G, 1, 10.0, 5.0, 0.0), 10 / 50)

    def test_infinite_snr(self):
        assert calibrate_noise(np.eye(4), 1, 1.0, 4.0, math.inf) == 0.0
        assert calibrate_noise(np.eye(4), 1, 1.0, 4.0, 300.0) < 1e-29

    def test_linear_in_paths(self):
        G = np.eye(8)
        assert_allclose(calibrate_noise(G, 4, 1.0, 8.0, 10.0),
                        2 * calibrate_noise(G, 2, 1.0, 8.0, 10.0))
        assert calibrate_noise(G, PathSet.single(), 1.0, 8.0, 10.0) == \
            calibrate_noise(G, 1, 1.0, 8.0, 10.0)

    def test_band_reference(self):
        G = np.eye(8)
        assert_allclose(calibrate_noise(G, 1, 2.0, 4.0, 0.0, bandwidth=1.0),
                        2 * calibrate_noise(G, 1, 2.0, 4.0, 0.0))

    def test_add_noise_variance(self):
        r = add_noise(np.zeros(200000), 0.5, 3)
        assert abs(np.var(r) - 0.5) < 0.01
        assert abs(np.mean(r.real ** 2) - 0.25) < 0.01


def test_pathset_csv(tmp_path):
    p = draw_paths(ChannelSpec(0.01, 1.001, 6), 2)
    write_pathset(tmp_path / "p.csv", p)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "gain_re,gain_im,delay_s,scale"
    q = read_pathset(tmp_path / "p.csv")
    assert np.array_equal(q.gains, p.gains) and np.array_equal(q.delays, p.delays)
    assert np.array_equal(q.scales, p.scales)
