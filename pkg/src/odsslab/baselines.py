"""OFDM and OTFS reference transceivers.

Both are linear modulators onto a bank of windowed tones, so like the ODSS
bank they expose a sample x symbol matrix that the harness can push through
the wideband channel.  Receivers are matched projections followed by the
same one-tap MMSE as the ODSS receiver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .odss_modem import mmse_equalize
from .waveforms import PHYDYAS_K3, PhydyasWindow

__all__ = [
    "OtfsGrid",
    "OfdmConfig",
    "DDPathSet",
    "isfft",
    "sfft",
    "otfs_pulse",
    "otfs_modulate",
    "otfs_demodulate",
    "heisenberg_matrix",
    "twisted_convolve",
    "ofdm_pulse",
    "ofdm_frequencies",
    "ofdm_modulate",
    "ofdm_demodulate",
    "ofdm_matrix",
    "onetap_mmse",
]

onetap_mmse = mmse_equalize


@dataclass(frozen=True)
class OtfsGrid:
    """``N`` subcarriers spaced ``delta_f`` by ``M`` slots of length ``T``.

    ``f0`` is the baseband frequency of subcarrier 0.
    """

    N: int = 8
    M: int = 16
    T: float = 0.125
    delta_f: float = 160.0
    f0: float = 0.0

    def __post_init__(self):
        if self.N < 1 or self.M < 1 or self.T <= 0 or self.delta_f <= 0:
            raise ValueError("invalid OTFS grid")

    @property
    def delta_tau(self) -> float:
        return 1.0 / (self.N * self.delta_f)

    @property
    def delta_nu(self) -> float:
        return 1.0 / (self.M * self.T)

    @property
    def size(self) -> int:
        return self.N * self.M

    @property
    def frequencies(self) -> np.ndarray:
        return self.f0 + self.delta_f * np.arange(self.N)


def isfft(x) -> np.ndarray:
    """Delay-Doppler symbols ``x[k, l]`` (``N x M``) to the time-frequency grid.

    ``X[n, m] = 1/(N M) sum_{k,l} x[k, l] exp(j 2 pi (m l / M - n k / N))``.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2:
        raise ValueError("expected an N x M grid")
    return np.fft.fft(np.fft.ifft(x, axis=1), axis=0) / x.shape[0]


def sfft(X) -> np.ndarray:
    """Inverse of :func:`isfft`."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise ValueError("expected an N x M grid")
    return np.fft.ifft(np.fft.fft(X, axis=1), axis=0) * X.shape[0]


def otfs_pulse(grid: OtfsGrid, Fs: float, window: PhydyasWindow = PHYDYAS_K3) -> np.ndarray:
    """Unit-energy window spanning one slot."""
    L = int(round(grid.T * Fs))
    w = window(np.arange(L) / Fs, grid.T).astype(complex)
    return w / np.linalg.norm(w)


def _check_band(freqs, Fs):
    if np.any(freqs < -Fs / 2) or np.any(freqs > Fs / 2):
        raise ValueError("subcarrier frequencies outside +-Fs/2")


def _slot_len(grid, Fs, g):
    L = int(round(grid.T * Fs))
    if len(g) > L:
        raise ValueError("pulse longer than the slot")
    return L


def otfs_modulate(X, g_tx, grid: OtfsGrid, Fs: float) -> np.ndarray:
    """``s(t) = sum_{n,m} X[n,m] exp(j 2 pi f_n (t - m T)) g(t - m T)``."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (grid.N, grid.M):
        raise ValueError("grid shape mismatch")
    _check_band(grid.frequencies, Fs)
    g = np.asarray(g_tx)
    L = _slot_len(grid, Fs, g)
    tl = np.arange(len(g)) / Fs
    E = np.exp(2j * np.pi * np.outer(tl, grid.frequencies))  # len(g) x N
    s = np.zeros(L * grid.M, dtype=complex)
    for m in range(grid.M):
        s[m * L:m * L + len(g)] += g * (E @ X[:, m])
    return s


def otfs_demodulate(r, g_rx, grid: OtfsGrid, Fs: float) -> np.ndarray:
    """``Y[n,m] = sum_t exp(-j 2 pi f_n (t - m T)) conj(g(t - m T)) r(t)``."""
    r = np.asarray(r)
    g = np.asarray(g_rx)
    L = _slot_len(grid, Fs, g)
    if r.shape[0] < L * grid.M:
        raise ValueError("received signal shorter than the frame")
    tl = np.arange(len(g)) / Fs
    E = np.exp(2j * np.pi * np.outer(tl, grid.frequencies))
    Y = np.empty((grid.N, grid.M), dtype=complex)
    for m in range(grid.M):
        seg = r[m * L:m * L + len(g)]
        Y[:, m] = E.conj().T @ (np.conj(g) * seg)
    return Y


def heisenberg_matrix(g_tx, grid: OtfsGrid, Fs: float) -> np.ndarray:
    """Columns are the atoms of :func:`otfs_modulate`, index ``n * M + m``."""
    g = np.asarray(g_tx)
    L = _slot_len(grid, Fs, g)
    _check_band(grid.frequencies, Fs)
    tl = np.arange(len(g)) / Fs
    E = np.exp(2j * np.pi * np.outer(tl, grid.frequencies)) * g[:, None]
    G = np.zeros((L * grid.M, grid.N * grid.M), dtype=complex)
    for n in range(grid.N):
        for m in range(grid.M):
            G[m * L:m * L + len(g), n * grid.M + m] = E[:, n]
    return G


@dataclass(frozen=True)
class DDPathSet:
    """Narrowband paths: gains, delays (s) and Doppler shifts (Hz)."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self):
        for name, dt in (("gains", complex), ("delays", float), ("dopplers", float)):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=dt)))
        if not (self.gains.shape == self.delays.shape == self.dopplers.shape):
            raise ValueError("length mismatch")

    def __len__(self):
        return len(self.gains)

    def __iter__(self):
        return iter(zip(self.gains, self.delays, self.dopplers))


def twisted_convolve(h2: DDPathSet, h1: DDPathSet) -> DDPathSet:
    """Single narrowband channel equal to ``h1`` followed by ``h2``.

    Pairs combine to delay ``tau2 + tau1``, Doppler ``nu2 + nu1`` and gain
    ``a2 a1 exp(j 2 pi nu2 tau1)``.
    """
    g = (h2.gains[:, None] * h1.gains[None, :]
         * np.exp(2j * np.pi * h2.dopplers[:, None] * h1.delays[None, :]))
    d = h2.delays[:, None] + h1.delays[None, :]
    v = h2.dopplers[:, None] + h1.dopplers[None, :]
    return DDPathSet(g.ravel(), d.ravel(), v.ravel())


@dataclass(frozen=True)
class OfdmConfig:
    """One OFDM symbol of ``n_fft`` samples with every ``used_stride``-th bin.

    With ``centered`` the bins are placed symmetrically around DC, so bin
    ``n_used/2`` sits at 0 Hz (the carrier).
    """

    n_fft: int = 2560
    used_stride: int = 20
    Fs: float = 1280.0
    window: PhydyasWindow = PHYDYAS_K3
    centered: bool = True

    def __post_init__(self):
        if self.n_fft % self.used_stride:
            raise ValueError("n_fft must be a multiple of used_stride")

    @property
    def n_used(self) -> int:
        return self.n_fft // self.used_stride

    @property
    def spacing(self) -> float:
        return self.used_stride * self.Fs / self.n_fft

    @property
    def duration(self) -> float:
        return self.n_fft / self.Fs


def _bins(cfg: OfdmConfig) -> np.ndarray:
    b = np.arange(cfg.n_used) * cfg.used_stride
    if cfg.centered:
        b = b - cfg.n_fft // 2
    return b


def ofdm_frequencies(cfg: OfdmConfig) -> np.ndarray:
    return _bins(cfg) * cfg.Fs / cfg.n_fft


def ofdm_pulse(cfg: OfdmConfig) -> np.ndarray:
    w = cfg.window(np.arange(cfg.n_fft) / cfg.Fs, cfg.duration)
    return w / np.linalg.norm(w)


def ofdm_modulate(cfg: OfdmConfig, symbols) -> np.ndarray:
    """Windowed inverse DFT synthesis on the used bins (unit-energy tones)."""
    x = np.asarray(symbols, dtype=complex)
    if x.shape[0] != cfg.n_used:
        raise ValueError(f"need {cfg.n_used} symbols")
    spec = np.zeros((cfg.n_fft,) + x.shape[1:], dtype=complex)
    spec[_bins(cfg) % cfg.n_fft] = x
    g = ofdm_pulse(cfg)
    g = g.reshape((-1,) + (1,) * (x.ndim - 1))
    return g * np.fft.ifft(spec, axis=0) * cfg.n_fft


def ofdm_demodulate(cfg: OfdmConfig, r) -> np.ndarray:
    """Matched projections of ``r`` onto the windowed tones."""
    r = np.asarray(r)
    if r.shape[0] < cfg.n_fft:
        raise ValueError("received signal shorter than the symbol")
    g = ofdm_pulse(cfg).reshape((-1,) + (1,) * (r.ndim - 1))
    S = np.fft.fft(np.conj(g) * r[:cfg.n_fft], axis=0)
    return S[_bins(cfg) % cfg.n_fft]


def ofdm_matrix(cfg: OfdmConfig) -> np.ndarray:
    return ofdm_modulate(cfg, np.eye(cfg.n_used))
