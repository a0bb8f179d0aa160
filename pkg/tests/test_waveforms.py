import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from odsslab.waveforms import (PHYDYAS_K3, RECTANGULAR, ChirpletSpec, PhydyasWindow, build_bank,
                               chirplet, correlation_matrix, cross_ambiguity, phydyas_window,
                               read_waveforms, subcarrier_spectra, write_waveforms)


@pytest.fixture(scope="module")
def dyadic():
    return build_bank(2.0, 7, 1 / 1.9, 1.9, 2560.0, band=1280.0)


class TestWindow:
    def test_edge_and_peak(self):
        A = (0.91143783, 0.41143783)
        assert abs(phydyas_window(3, A, [0.0], 2.0)[0]) < 1e-8
        assert_allclose(phydyas_window(3, A, [1.0], 2.0), [3.64575132], atol=1e-8)

    def test_rectangular(self):
        assert_allclose(phydyas_window(3, (0, 0), np.linspace(0, 1, 7), 1.0), 1.0)
        assert RECTANGULAR.is_rectangular

    def test_symmetric(self):
        t = np.linspace(0, 1.9, 101)
        w = PHYDYAS_K3(t, 1.9)
        assert_allclose(w, w[::-1], atol=1e-12)

    def test_bad_coefficients(self):
        with pytest.raises(ValueError):
            PhydyasWindow(3, (0.9,))
        with pytest.raises(ValueError):
            phydyas_window(1, (), [0.0], 1.0)


class TestChirplet:
    def test_origin(self):
        g = chirplet(ChirpletSpec(2.0, 1.0, 100.0))
        assert g[0] == 1 + 0j

    def test_tone_when_q_is_one(self):
        spec = ChirpletSpec(1.0, 2.0, 50.0)
        t = np.arange(100) / 50.0
        assert_allclose(chirplet(spec), np.exp(2j * np.pi * t), atol=1e-12)

    def test_sweep(self):
        spec = ChirpletSpec(2.0, 1.0, 1000.0, f_unit=10.0)
        assert math.isclose(spec.kappa * spec.T, (spec.f2 - spec.f1) * 10.0)
        g = chirplet(spec)
        ph = np.unwrap(np.angle(g))
        inst = np.diff(ph) * spec.sample_rate / (2 * np.pi)
        mid = spec.n_samples // 2
        # finite difference sits half a sample after t = T/2
        expect = (spec.f1 + spec.f2) / 2 * 10.0 + spec.kappa * 0.5 / spec.sample_rate
        assert_allclose(inst[mid], expect, rtol=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            ChirpletSpec(2.0, 0.0, 10.0)
        with pytest.raises(ValueError):
            chirplet(ChirpletSpec(2.0, 1.0, 2.0))


class TestBank:
    def test_counts(self, dyadic):
        assert dyadic.M_tot == 127
        assert np.count_nonzero(dyadic.n_index == 0) == 1
        assert np.bincount(dyadic.n_index).tolist() == [1, 2, 4, 8, 16, 32, 64]
        assert_allclose(np.linalg.norm(dyadic.matrix, axis=0), 1.0, rtol=1e-12)

    def test_prototype_is_column_zero(self, dyadic):
        from odsslab.waveforms import prototype_at
        t = np.arange(dyadic.n_samples) / dyadic.sample_rate
        g = prototype_at(dyadic.spec, dyadic.window, t) * np.exp(-2j * np.pi * dyadic.carrier_hz * t)
        assert_allclose(dyadic.prototype, g / np.linalg.norm(g), atol=1e-12)

    def test_energy_of_compression(self, dyadic):
        e = dyadic.raw_energy
        assert np.abs(e / e[0] - 1).max() < 1e-6

    def test_lattice(self, dyadic):
        j = dyadic.index(3, 5)
        assert_allclose(dyadic.delay[j], 5 * 1.9 / 8)
        assert dyadic.scale[j] == 8

    def test_band(self, dyadic):
        lo = dyadic.carrier_hz - dyadic.band / 2
        hi = dyadic.carrier_hz + dyadic.band / 2
        assert 0 < lo < 20 and 1280 < hi < 1300

    def test_nyquist(self):
        with pytest.raises(ValueError):
            build_bank(2.0, 7, 1 / 1.9, 1.9, 1000.0, band=1280.0)

    def test_generic_bank_floor(self):
        b = build_bank(1.5, 5, 1 / 2.0, 2.0, 2000.0, band=800.0)
        C = np.abs(correlation_matrix(b))
        np.fill_diagonal(C, 0)
        assert 20 * np.log10(C.max()) < -40

    def test_spectra_double_per_scale(self, dyadic):
        f, p = subcarrier_spectra(dyadic, 1 << 15)
        widths = []
        for n in range(1, 7):
            j = dyadic.index(n, 0)
            band = f[p[j] > p[j].max() - 3]
            widths.append(band.max() - band.min())
        ratio = np.array(widths[1:]) / np.array(widths[:-1])
        assert np.all(np.abs(ratio - 2) < 0.4)

    def test_rectangular_has_higher_sidelobes(self):
        kw = dict(band=1280.0)
        b1 = build_bank(2.0, 4, 1 / 1.9, 1.9, 2560.0, PHYDYAS_K3, **kw)
        b2 = build_bank(2.0, 4, 1 / 1.9, 1.9, 2560.0, RECTANGULAR, **kw)

        def sidelobe(b):
            f, p = subcarrier_spectra(b, 1 << 15)
            peak_f = f[np.argmax(p[0])]
            far = np.abs(f - peak_f) > 40
            return p[0][far].max()

        assert sidelobe(b2) > sidelobe(b1) + 10


class TestAmbiguity:
    def test_matched(self, dyadic):
        g = dyadic.prototype
        assert_allclose(cross_ambiguity(g, g, 0.0, 1.0, 2560.0), 1.0, atol=1e-12)
        assert_allclose(cross_ambiguity(g, g, 0.0, 1.0, 2560.0, dyadic.carrier_hz), 1.0,
                        atol=1e-12)

    def test_delayed(self, dyadic):
        g = dyadic.prototype
        r = np.r_[np.zeros(100), g]
        assert_allclose(cross_ambiguity(g, r, 100 / 2560.0, 1.0, 2560.0), 1.0, atol=1e-12)

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            cross_ambiguity(np.ones(4), np.ones(4), 0, 0.0, 1.0)

    def test_against_analytic_scaling(self):
        # warped copy of an analytic pulse versus direct evaluation
        Fs = 100.0
        t = np.arange(600) / Fs

        def pulse(u):
            return np.exp(-((u - 3) / 0.6) ** 2) * np.exp(2j * np.pi * 7 * u)

        g = pulse(t)
        r = pulse(1.003 * (t - 0.2))
        direct = np.sum(np.conj(pulse(1.003 * (t - 0.2))) * np.sqrt(1.003) * r)
        # interpolation tolerance of the 31-tap kernel
        assert_allclose(cross_ambiguity(g, r, 0.2, 1.003, Fs), direct, rtol=1e-5)


class TestCorrelation:
    def test_single(self):
        v = np.ones((5, 1)) / math.sqrt(5)
        assert_allclose(correlation_matrix(v), [[1.0]])

    def test_hermitian_and_workers(self):
        rng = np.random.default_rng(3)
        G = rng.normal(size=(60, 40)) + 1j * rng.normal(size=(60, 40))
        C1 = correlation_matrix(G, workers=1, block=7)
        C4 = correlation_matrix(G, workers=4, block=7)
        assert np.array_equal(C1, C4)
        assert np.abs(C1 - C1.conj().T).max() < 1e-12
        assert np.all(np.abs(np.diag(C1).imag) < 1e-12)


def test_waveform_export_round_trip(tmp_path, dyadic):
    raw, side = write_waveforms(tmp_path / "bank", dyadic)
    assert raw.stat().st_size == 127 * dyadic.n_samples * 8
    M, head = read_waveforms(tmp_path / "bank")
    assert float(head["sample_rate"]) == 2560.0
    assert_allclose(M, dyadic.matrix, atol=1e-6)
    text = side.read_text().splitlines()
    assert text[-1].startswith("126 6 63 ")
