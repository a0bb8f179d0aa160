"""Wideband delay-scale channel: path draws, emulation, composition and noise.

A channel is a finite set of paths ``(h, tau, alpha)`` acting as

    r(t) = sum_p h_p s(alpha_p (t - tau_p))

on the physical waveform.  Signals are handled at complex baseband, so each
path also rotates the baseband copy by ``exp(j 2 pi f_c ((alpha-1) t - alpha tau))``
where ``f_c`` is the physical frequency of baseband DC.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal, sparse

from ._interp import kaiser_sinc

__all__ = [
    "PathSet",
    "ChannelSpec",
    "ResamplerConfig",
    "draw_paths",
    "rational_approx",
    "realize_paths",
    "channel_operator",
    "apply_channel",
    "omega_convolve",
    "calibrate_noise",
    "add_noise",
    "write_pathset",
    "read_pathset",
]


@dataclass(frozen=True)
class PathSet:
    """Discrete wideband paths: complex gains, delays (s) and scales."""

    gains: np.ndarray
    delays: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        d = np.atleast_1d(np.asarray(self.delays, dtype=float))
        a = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if not (g.shape == d.shape == a.shape) or g.ndim != 1:
            raise ValueError("gains, delays and scales must be equal-length vectors")
        if np.any(a <= 0):
            raise ValueError("scales must be positive")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "scales", a)

    @classmethod
    def single(cls, gain=1.0, delay=0.0, scale=1.0):
        return cls([gain], [delay], [scale])

    @classmethod
    def from_tuples(cls, paths):
        paths = list(paths)
        if not paths:
            return cls([], [], [])
        g, d, a = zip(*paths)
        return cls(g, d, a)

    def __len__(self):
        return len(self.gains)

    def __iter__(self):
        return iter(zip(self.gains, self.delays, self.scales))

    def in_spec(self, tau_max: float, alpha_max: float) -> bool:
        eps = 1e-12
        return bool(np.all(np.abs(self.delays) <= tau_max + eps)
                    and np.all(self.scales <= alpha_max + eps)
                    and np.all(self.scales >= 1 / alpha_max - eps))


@dataclass(frozen=True)
class ChannelSpec:
    """Random channel law: Rayleigh gains, uniform delays and scales."""

    tau_max: float = 0.01
    alpha_max: float = 1.001
    P: int = 20

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if self.tau_max < 0 or self.alpha_max < 1:
            raise ValueError("need tau_max >= 0 and alpha_max >= 1")


@dataclass(frozen=True)
class ResamplerConfig:
    """Settings for :func:`apply_channel`.

    ``round_delay`` snaps delays to the oversampled grid; ``sqrt_alpha``
    enables the ``sqrt(alpha)`` energy normalization of each path.
    """

    oversample: int = 8
    rational_tol: float = 1e-5
    max_denominator: int = 10 ** 6
    taps: int = 16
    beta: float = 16.0
    cutoff: float = 0.85
    round_delay: bool = True
    sqrt_alpha: bool = False
    pad: int = 16

    def __post_init__(self):
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")
        if self.rational_tol <= 0:
            raise ValueError("rational_tol must be positive")


def draw_paths(spec: ChannelSpec, seed) -> PathSet:
    """Draw one channel realization.

    ``seed`` may be an int, a sequence of ints or a ``numpy.random.Generator``.
    Scales come from one uniform variate per path mapped onto
    ``(1/alpha_max, alpha_max)``, so sweeps over ``alpha_max`` with the same
    seed share their random numbers.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    P = spec.P
    g = (rng.standard_normal(P) + 1j * rng.standard_normal(P)) / math.sqrt(2)
    d = rng.uniform(0.0, 1.0, P) * spec.tau_max
    u = rng.uniform(0.0, 1.0, P)
    lo, hi = 1.0 / spec.alpha_max, spec.alpha_max
    a = lo + u * (hi - lo) if hi > lo else np.ones(P)
    return PathSet(g, d, a)


def rational_approx(x: float, tol: float = 1e-5, max_denominator: int = 10 ** 6):
    """First continued-fraction convergent ``p/q`` with ``|p/q - x| <= tol |x|``.

    Raises ``ValueError`` if no convergent with ``q <= max_denominator``
    qualifies.
    """
    if not math.isfinite(x) or x <= 0:
        raise ValueError("x must be positive and finite")
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    r = x
    for _ in range(64):
        a = math.floor(r)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_denominator:
            break
        if abs(h1 / k1 - x) <= tol * abs(x):
            return h1, k1
        frac = r - a
        if frac <= 0:
            break
        r = 1.0 / frac
    raise ValueError(f"no rational approximation of {x!r} within tol={tol} "
                     f"and denominator <= {max_denominator}")


def _plan(paths: PathSet, cfg: ResamplerConfig, Fs: float):
    R = cfg.oversample
    plan = []
    for g, tau, a in paths:
        p, q = rational_approx(float(a), cfg.rational_tol, cfg.max_denominator)
        D = round(tau * Fs * R) if cfg.round_delay else tau * Fs * R
        plan.append((complex(g), D, p, q))
    return plan


def realize_paths(paths: PathSet, cfg: ResamplerConfig, Fs: float) -> PathSet:
    """The paths actually emulated: rounded delays and rational scales."""
    R = cfg.oversample
    pl = _plan(paths, cfg, Fs)
    return PathSet([g for g, *_ in pl], [D / (Fs * R) for _, D, _, _ in pl],
                   [p / q for _, _, p, q in pl])


def _out_length(paths: PathSet, n_in: int, Fs: float) -> int:
    if len(paths) == 0:
        return n_in
    ends = paths.delays + n_in / (Fs * paths.scales)
    return int(math.ceil(max(ends.max() * Fs, n_in))) + 2


def channel_operator(paths: PathSet, cfg: ResamplerConfig, Fs: float, n_in: int,
                     n_out: int | None = None, f_c: float = 0.0):
    """Sparse map from the oversampled (padded) input to the output samples.

    Returns ``(S, n_out)``; the oversampled input comes from
    :func:`_upsample`.
    """
    R = cfg.oversample
    real = realize_paths(paths, cfg, Fs)
    if n_out is None:
        n_out = _out_length(real, n_in, Fs)
    n_fine = (n_in + 2 * cfg.pad) * R
    j = np.arange(n_out)
    t = j / Fs
    k = np.arange(-(cfg.taps // 2) + (0 if cfg.taps % 2 else 1), cfg.taps // 2 + 1)
    rows, cols, vals = [], [], []
    for (g, D, p, q), a_hat, tau_hat in zip(_plan(paths, cfg, Fs), real.scales, real.delays):
        if isinstance(D, int):
            num = p * (R * j - D)
            base = num // q + cfg.pad * R
            frac = (num % q) / q
        else:
            pos = a_hat * (R * j - D) + cfg.pad * R
            base = np.floor(pos).astype(np.int64)
            frac = pos - base
        w = kaiser_sinc(frac[:, None] - k[None, :], cfg.taps / 2, cfg.beta, cfg.cutoff)
        on = frac == 0
        if on.any():
            w[on] = (k == 0).astype(float)
        amp = g * (math.sqrt(a_hat) if cfg.sqrt_alpha else 1.0)
        rot = amp * np.exp(2j * np.pi * f_c * ((a_hat - 1) * t - a_hat * tau_hat)) if f_c \
            else np.full(n_out, amp)
        idx = base[:, None] + k[None, :]
        ok = (idx >= 0) & (idx < n_fine)
        rr = np.broadcast_to(j[:, None], idx.shape)
        rows.append(rr[ok])
        cols.append(idx[ok])
        vals.append((w * rot[:, None])[ok])
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    S = sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_fine), dtype=complex)
    return S, n_out


def _upsample(s, cfg: ResamplerConfig):
    x = np.asarray(s, dtype=complex)
    pad = [(cfg.pad, cfg.pad)] + [(0, 0)] * (x.ndim - 1)
    x = np.pad(x, pad)
    if cfg.oversample == 1:
        return x
    return signal.resample(x, x.shape[0] * cfg.oversample, axis=0)


def apply_channel(s, paths: PathSet, cfg: ResamplerConfig | None = None, f_c: float = 0.0,
                  Fs: float = 1.0, n_out: int | None = None) -> np.ndarray:
    """Pass baseband samples ``s`` (axis 0 = time) through the paths.

    The signal is oversampled by ``cfg.oversample`` with FFT interpolation,
    each path reads it at ``alpha (t - tau)`` with a rational ``alpha`` and
    (by default) a delay rounded to the fine grid, the carrier rotation is
    applied and the result is taken back on the original sample grid.  The
    output is long enough to hold every path's energy unless ``n_out`` is
    given.
    """
    cfg = cfg or ResamplerConfig()
    s = np.asarray(s)
    S, n_out = channel_operator(paths, cfg, Fs, s.shape[0], n_out, f_c)
    fine = _upsample(s, cfg)
    return S @ fine


def omega_convolve(h2: PathSet, h1: PathSet) -> PathSet:
    """Single channel equivalent to applying ``h1`` and then ``h2``.

    Path pairs combine as ``(g2 g1, tau2 + tau1 / alpha2, alpha2 alpha1)``.
    """
    g = np.outer(h2.gains, h1.gains).ravel()
    d = (h2.delays[:, None] + h1.delays[None, :] / h2.scales[:, None]).ravel()
    a = np.outer(h2.scales, h1.scales).ravel()
    return PathSet(g, d, a)


def calibrate_noise(G, P, Fs: float, T: float, snr_db: float,
                    bandwidth: float | None = None) -> float:
    """Per-sample complex noise variance for a target SNR.

    Received power is ``P * trace(G G^H) / (Fs T)`` for unit-power symbols
    through modulator ``G`` and ``P`` unit-variance paths.  With
    ``bandwidth`` the SNR is referred to that band instead of the full
    sampling band, i.e. the variance is scaled by ``Fs / bandwidth``.
    """
    G = np.asarray(getattr(G, "matrix", G))
    n_paths = len(P) if isinstance(P, PathSet) else P
    power = n_paths * np.sum(np.abs(G) ** 2) / (Fs * T)
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    var = power / 10 ** (snr_db / 10)
    if bandwidth:
        var *= Fs / bandwidth
    return float(var)


def add_noise(r, var: float, rng) -> np.ndarray:
    """Add circular complex white Gaussian noise of variance ``var``."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    r = np.asarray(r)
    w = rng.standard_normal(r.shape) + 1j * rng.standard_normal(r.shape)
    return r + math.sqrt(var / 2) * w


def write_pathset(path, paths: PathSet) -> None:
    """CSV with header ``gain_re,gain_im,delay_s,scale``."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["gain_re", "gain_im", "delay_s", "scale"])
        for g, d, a in paths:
            w.writerow([repr(float(g.real)), repr(float(g.imag)), repr(float(d)), repr(float(a))])


def read_pathset(path) -> PathSet:
    with open(Path(path), newline="") as f:
        rows = list(csv.DictReader(f))
    return PathSet([float(r["gain_re"]) + 1j * float(r["gain_im"]) for r in rows],
                   [float(r["delay_s"]) for r in rows],
                   [float(r["scale"]) for r in rows])
