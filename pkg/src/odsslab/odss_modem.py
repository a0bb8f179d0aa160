"""ODSS modem: parameter selection, Mellin-Fourier transform, (de)modulation
over the chirplet bank, channel-matrix measurement and one-tap MMSE decoding.

Symbols live on a ragged grid whose row ``k`` holds ``M(k) = floor(q**k)``
entries; the same shape is used for the delay-scale coefficients.  Frames are
stacked row by row into flat vectors for all matrix operations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import PathSet, ResamplerConfig, apply_channel
from .export import write_matrix_csv
from .waveforms import SubcarrierBank, cross_ambiguity, scale_counts

log = logging.getLogger(__name__)

__all__ = [
    "OdssParams",
    "SymbolFrame",
    "DelayScaleFrame",
    "DiagChannel",
    "BPSK",
    "w_max",
    "select_params",
    "dyadic_params",
    "build_transform_matrix",
    "odss_transform",
    "inverse_odss_transform",
    "symbol_prior",
    "modulate",
    "demodulate",
    "measure_channel_matrix",
    "mellin_fourier_matrix",
    "analytic_diag_gains",
    "mmse_equalize",
    "slice_symbols",
    "decode_frame",
    "write_matrix_csv",
]

BPSK = np.array([1.0 + 0j, -1.0 + 0j])


class InfeasibleConfiguration(ValueError):
    """No scale count satisfies the bandwidth bound within the cap."""


@dataclass(frozen=True)
class OdssParams:
    """ODSS design parameters.

    ``W`` is the prototype bandwidth ``B (q-1) / (q**N - 1)`` and ``eta``
    the spectral efficiency ``M_tot W / (gamma B)``.
    """

    B: float
    tau_max: float
    alpha_max: float
    gamma: float
    q: float
    N: int
    W: float
    W_max: float
    M_tot: int
    eta: float

    @property
    def counts(self) -> np.ndarray:
        return scale_counts(self.q, self.N)


def w_max(q: float, N: int, alpha_max: float, tau_max: float) -> float:
    """Largest prototype bandwidth keeping the lattice free of overlap."""
    if N == 1:
        return 1.0 / ((1 + alpha_max) * tau_max)
    return 1.0 / ((1 + alpha_max ** (2 * N - 3)) * tau_max)


def _bandwidth(B, q, N):
    if q == 1:
        return B / N
    return B * (q - 1) / (q ** N - 1)


def select_params(B: float, tau_max: float, alpha_max: float, gamma: float = 2.0,
                  n_cap: int = 4096) -> OdssParams:
    """Choose ``q``, ``N`` and ``W`` for a band, delay spread and Doppler spread.

    ``q = alpha_max**2``; ``N`` is the smallest count with
    ``B (q-1) / (q**N - 1) < W_max(q, N)``.  ``alpha_max = 1`` gives the
    single-scale case ``q = 1, N = 1, W = 1 / (2 tau_max)``.
    """
    if B <= 0 or tau_max <= 0:
        raise ValueError("B and tau_max must be positive")
    if alpha_max < 1:
        raise ValueError("alpha_max must be >= 1")
    if gamma <= 1:
        raise ValueError("gamma must be > 1")
    if alpha_max == 1:
        W = 1.0 / (2 * tau_max)
        return OdssParams(B, tau_max, 1.0, gamma, 1.0, 1, W, w_max(1.0, 1, 1.0, tau_max),
                          1, W / (gamma * B))
    q = alpha_max ** 2
    for N in range(1, n_cap + 1):
        W = _bandwidth(B, q, N)
        wm = w_max(q, N, alpha_max, tau_max)
        if W < wm:
            M_tot = int(scale_counts(q, N).sum())
            return OdssParams(B, tau_max, alpha_max, gamma, q, N, W, wm, M_tot,
                              M_tot * W / (gamma * B))
    raise InfeasibleConfiguration(f"no N <= {n_cap} meets the bandwidth bound")


def dyadic_params(B: float = 1280.0, N: int = 7, tau_max: float = 0.01,
                  alpha_max: float = 1.001, gamma: float = 2.0) -> OdssParams:
    """The fixed ``q = 2`` grid used for the waveform and BER experiments."""
    q = 2.0
    W = _bandwidth(B, q, N)
    M_tot = int(scale_counts(q, N).sum())
    return OdssParams(B, tau_max, alpha_max, gamma, q, N, W,
                      w_max(q, N, alpha_max, tau_max), M_tot, M_tot * W / (gamma * B))


class _Frame:
    """Ragged frame stored as a flat vector plus row lengths."""

    def __init__(self, flat, counts):
        self.counts = np.asarray(counts, dtype=int)
        flat = np.asarray(flat, dtype=complex)
        if flat.shape[0] != int(self.counts.sum()):
            raise ValueError(f"frame needs {int(self.counts.sum())} entries, got {flat.shape[0]}")
        self.flat = flat

    @classmethod
    def from_rows(cls, rows):
        rows = [np.asarray(r, dtype=complex) for r in rows]
        return cls(np.concatenate(rows), [len(r) for r in rows])

    @classmethod
    def zeros(cls, counts):
        return cls(np.zeros(int(np.sum(counts)), dtype=complex), counts)

    @property
    def rows(self):
        return np.split(self.flat, np.cumsum(self.counts)[:-1])

    def __len__(self):
        return self.flat.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(counts={self.counts.tolist()})"


class SymbolFrame(_Frame):
    """Data symbols ``x[k, l]`` on the Mellin-Fourier grid."""


class DelayScaleFrame(_Frame):
    """Coefficients ``X[n, m]`` on the delay-scale lattice."""


@dataclass
class DiagChannel:
    """Per-subcarrier gains and the noise variance (scalar or per entry)."""

    gains: np.ndarray
    noise_var: float | np.ndarray = 0.0

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=complex)
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("non-finite channel gains")


def _counts(params) -> np.ndarray:
    if isinstance(params, OdssParams):
        return params.counts
    q, N = params
    return scale_counts(q, N)


def build_transform_matrix(params, cond_limit: float = 1e12, variant: str = "literal"):
    """Matrix ``T`` with ``X = T x`` and its numerical inverse.

    ``T[(n,m), (k,l)] = q**(-n/2) / (N M(k)) exp(j 2 pi (m l / M(k) - n k / N))``.
    ``params`` is an :class:`OdssParams` or a ``(q, N)`` pair.

    ``variant="unitary"`` replaces ``T`` by its nearest unitary matrix (the
    polar factor ``U V^H`` of its SVD), which removes the noise enhancement
    of the mixed-length rows at the cost of no longer matching the sum above.
    """
    if variant not in ("literal", "unitary"):
        raise ValueError(f"unknown transform variant {variant!r}")
    if isinstance(params, OdssParams):
        q, N = params.q, params.N
    else:
        q, N = params
    M = _counts(params)
    n = np.repeat(np.arange(N), M)
    m = np.concatenate([np.arange(c) for c in M])
    k, l = n, m
    Mk = M[k]
    T = (q ** (-n[:, None] / 2) / (N * Mk[None, :])
         * np.exp(2j * np.pi * (m[:, None] * l[None, :] / Mk[None, :]
                                - n[:, None] * k[None, :] / N)))
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > cond_limit:
        raise np.linalg.LinAlgError(f"transform matrix is singular (cond={cond:.3g})")
    if variant == "unitary":
        U, _, Vh = np.linalg.svd(T)
        T = U @ Vh
    Ti = np.linalg.inv(T)
    err = np.abs(T @ Ti - np.eye(len(n))).max()
    if err > 1e-8:
        raise np.linalg.LinAlgError(f"inverse check failed ({err:.2e})")
    log.debug("transform q=%g N=%d cond=%.3g", q, N, cond)
    return T, Ti


def odss_transform(x: SymbolFrame, params, T=None) -> DelayScaleFrame:
    """Map data symbols to delay-scale coefficients, ``X = T x``."""
    M = _counts(params)
    if not np.array_equal(np.asarray(x.counts), M):
        raise ValueError("frame shape does not match the parameters")
    if T is None:
        T, _ = build_transform_matrix(params)
    return DelayScaleFrame(T @ x.flat, M)


def inverse_odss_transform(X: DelayScaleFrame, params, T_inv=None) -> SymbolFrame:
    M = _counts(params)
    if not np.array_equal(np.asarray(X.counts), M):
        raise ValueError("frame shape does not match the parameters")
    if T_inv is None:
        _, T_inv = build_transform_matrix(params)
    return SymbolFrame(T_inv @ X.flat, M)


def symbol_prior(T, symbol_power: float = 1.0) -> np.ndarray:
    """Per-entry power of ``X = T x`` for i.i.d. symbols, ``diag(T T^H)``."""
    T = np.asarray(T)
    return symbol_power * np.sum(np.abs(T) ** 2, axis=1)


def _bank_counts(bank: SubcarrierBank):
    return np.bincount(bank.n_index, minlength=bank.N)


def modulate(X, bank: SubcarrierBank) -> np.ndarray:
    """``s = G X``: superpose the bank waveforms weighted by the frame."""
    v = np.asarray(getattr(X, "flat", X))
    if v.shape[0] != bank.M_tot:
        raise ValueError("frame size does not match the bank")
    return bank.matrix @ v


def demodulate(r, bank: SubcarrierBank) -> DelayScaleFrame | np.ndarray:
    """Matched-filter outputs ``G^H r`` over the bank's frame.

    ``r`` may be longer than the frame (trailing samples are outside every
    waveform's support); a 2-D ``r`` returns a matrix of outputs.
    """
    r = np.asarray(r)
    ns = bank.n_samples
    if r.shape[0] < ns:
        raise ValueError(f"received signal shorter than the frame ({r.shape[0]} < {ns})")
    Y = bank.matrix.conj().T @ r[:ns]
    if r.ndim == 1:
        return DelayScaleFrame(Y, _bank_counts(bank))
    return Y


def measure_channel_matrix(paths: PathSet, bank: SubcarrierBank, applier=None,
                           cfg: ResamplerConfig | None = None, block: int = 32,
                           workers: int = 1) -> np.ndarray:
    """``D_full[:, j] = demodulate(channel(s_j))`` for every subcarrier.

    ``applier(signal_matrix) -> received`` defaults to :func:`apply_channel`
    at the bank's sample rate and carrier.
    """
    if applier is None:
        cfg = cfg or ResamplerConfig()

        def applier(s):
            return apply_channel(s, paths, cfg, bank.carrier_hz, bank.sample_rate)

    G = bank.matrix
    K = G.shape[1]
    D = np.empty((K, K), dtype=complex)
    spans = [(a, min(a + block, K)) for a in range(0, K, block)]

    def work(span):
        a, b = span
        r = applier(G[:, a:b])
        D[:, a:b] = G.conj().T @ r[:G.shape[0]]

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(work, spans))
    else:
        for s in spans:
            work(s)
    return D


def mellin_fourier_matrix(D_full, T, T_inv) -> np.ndarray:
    """Effective symbol-domain channel ``T^-1 D_full T``."""
    return T_inv @ D_full @ T


def analytic_diag_gains(paths: PathSet, bank: SubcarrierBank, sqrt_alpha: bool = False,
                        taps: int = 31) -> DiagChannel:
    """Diagonal channel gains from the prototype cross-ambiguity.

    For path ``(h, tau, alpha)`` the gain at lattice point ``(n, m)`` is
    ``h c A(m (alpha - 1) / W - q**n alpha tau, 1 / alpha)`` with ``A`` the
    auto-ambiguity of the scale-0 prototype and ``c = 1`` when the channel
    carries the ``sqrt(alpha)`` normalization, ``alpha**-1/2`` otherwise.
    """
    g = bank.prototype
    out = np.zeros(bank.M_tot, dtype=complex)
    qn = bank.q ** bank.n_index.astype(float)
    for h, tau, a in paths:
        c = 1.0 if sqrt_alpha else 1.0 / math.sqrt(a)
        for j in range(bank.M_tot):
            t0 = bank.m_index[j] * (a - 1) / bank.W - qn[j] * a * tau
            out[j] += h * c * cross_ambiguity(g, g, t0, 1.0 / a, bank.sample_rate,
                                              bank.carrier_hz, taps)
    return DiagChannel(out)


def mmse_equalize(Y, D: DiagChannel):
    """One-tap MMSE ``Z_i = conj(D_i) Y_i / (|D_i|**2 + s2_i)``.

    ``D.noise_var`` may be a vector; pass ``sigma2 / p_i`` there when the
    entries of the transmitted frame have unequal powers ``p_i``.  Entries
    with zero denominator give zero.
    """
    y = np.asarray(getattr(Y, "flat", Y))
    d = np.asarray(D.gains)
    if y.shape[0] != d.shape[0]:
        raise ValueError("size mismatch between outputs and gains")
    den = np.abs(d) ** 2 + np.asarray(D.noise_var)
    if y.ndim > 1:
        den = den.reshape((-1,) + (1,) * (y.ndim - 1))
        d = d.reshape(den.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(den > 0, np.conj(d) * y / np.where(den > 0, den, 1), 0)
    if isinstance(Y, _Frame):
        return type(Y)(z, Y.counts)
    return z


def slice_symbols(v, alphabet=BPSK) -> np.ndarray:
    """Nearest constellation point for each entry."""
    a = np.asarray(alphabet, dtype=complex)
    if a.size == 0:
        raise ValueError("empty alphabet")
    v = np.asarray(v)
    idx = np.argmin(np.abs(v[..., None] - a), axis=-1)
    return a[idx]


def decode_frame(Z, params, alphabet=BPSK, T_inv=None) -> SymbolFrame:
    """Hard decisions ``slice(T^-1 Z)``."""
    if np.asarray(alphabet).size == 0:
        raise ValueError("empty alphabet")
    if T_inv is None:
        _, T_inv = build_transform_matrix(params)
    z = np.asarray(getattr(Z, "flat", Z))
    if z.shape[0] != T_inv.shape[0]:
        raise ValueError("frame size does not match the transform")
    return SymbolFrame(slice_symbols(T_inv @ z, alphabet), _counts(params))
