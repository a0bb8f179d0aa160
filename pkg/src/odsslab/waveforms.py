"""Chirplet prototype, PHYDYAS window, q-adic subcarrier bank and ambiguity.

All waveforms are complex baseband sample vectors.  A bank stores the
physical frequency of its baseband DC as ``carrier_hz``; the physical
waveform is ``s(t) * exp(j 2 pi carrier_hz t)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._interp import sinc_interp

__all__ = [
    "ChirpletSpec",
    "PhydyasWindow",
    "PHYDYAS_K3",
    "RECTANGULAR",
    "SubcarrierBank",
    "AmbiguitySurface",
    "phydyas_window",
    "chirplet",
    "chirplet_at",
    "prototype_at",
    "build_bank",
    "cross_ambiguity",
    "ambiguity_surface",
    "correlation_matrix",
    "subcarrier_spectra",
    "write_waveforms",
    "read_waveforms",
]


@dataclass(frozen=True)
class PhydyasWindow:
    """PHYDYAS reference window with overlap factor ``K``.

    ``A`` holds the coefficients A[1] .. A[K-1].
    """

    K: int = 3
    A: tuple = (0.91143783, 0.41143783)

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if len(self.A) != self.K - 1:
            raise ValueError("need K-1 coefficients")

    def __call__(self, t, period: float):
        return phydyas_window(self.K, self.A, t, period)

    @property
    def is_rectangular(self) -> bool:
        return not any(self.A)


PHYDYAS_K3 = PhydyasWindow()
RECTANGULAR = PhydyasWindow(K=2, A=(0.0,))


def phydyas_window(K: int, A, t, period: float):
    """``1 + 2 sum_k (-1)**k A[k] cos(2 pi k t / period)``, k = 1 .. K-1.

    With ``period`` equal to the pulse support the window vanishes at both
    ends and peaks in the middle.
    """
    A = tuple(A)
    if K < 2 or len(A) != K - 1:
        raise ValueError("need K >= 2 and K-1 coefficients")
    t = np.asarray(t, dtype=float)
    w = np.ones_like(t)
    for k, a in enumerate(A, start=1):
        w = w + 2 * (-1) ** k * a * np.cos(2 * np.pi * k * t / period)
    return w


@dataclass(frozen=True)
class ChirpletSpec:
    """Linear chirp from ``f1 = 1/sqrt(q)`` to ``f2 = sqrt(q)`` over ``T``.

    ``f1``/``f2`` are normalized; ``f_unit`` (Hz per unit) turns them into
    physical frequencies.  ``kappa`` is the sweep rate in Hz/s.
    """

    q: float
    T: float
    sample_rate: float
    f_unit: float = 1.0

    def __post_init__(self):
        if self.T <= 0 or self.sample_rate <= 0:
            raise ValueError("T and sample_rate must be positive")
        if self.q < 1:
            raise ValueError("q must be >= 1")

    @property
    def f1(self) -> float:
        return 1.0 / math.sqrt(self.q)

    @property
    def f2(self) -> float:
        return math.sqrt(self.q)

    @property
    def kappa(self) -> float:
        return (self.f2 - self.f1) * self.f_unit / self.T

    @property
    def bandwidth(self) -> float:
        """Swept bandwidth in Hz."""
        return (self.f2 - self.f1) * self.f_unit

    @property
    def n_samples(self) -> int:
        return int(round(self.T * self.sample_rate))


def chirplet_at(spec: ChirpletSpec, t):
    """Evaluate ``exp(j 2 pi (f1 t + kappa t**2 / 2))`` at times ``t`` (s)."""
    t = np.asarray(t, dtype=float)
    return np.exp(2j * np.pi * (spec.f1 * spec.f_unit * t + 0.5 * spec.kappa * t * t))


def chirplet(spec: ChirpletSpec) -> np.ndarray:
    """Sampled chirplet on ``t = n / Fs`` in ``[0, T)``."""
    if spec.sample_rate < 2 * spec.f2 * spec.f_unit:
        raise ValueError("sample rate below twice the top chirp frequency")
    t = np.arange(spec.n_samples) / spec.sample_rate
    return chirplet_at(spec, t)


def prototype_at(spec: ChirpletSpec, window: PhydyasWindow, t):
    """Windowed chirplet ``g_w(t) g_0(t)`` on its support ``[0, T)``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    inside = (t >= 0) & (t < spec.T)
    g = window(t, spec.T) * chirplet_at(spec, t)
    return np.where(inside, g, 0.0)


@dataclass(frozen=True)
class SubcarrierBank:
    """Sampled q-adic chirplet bank.

    ``matrix`` is ``n_samples x M_tot`` with unit-norm columns ordered scale
    major (``n``), then shift (``m``).  ``W`` is the lattice rate: subcarrier
    ``(n, m)`` starts at ``m / (q**n W)``.  ``band`` is the total occupied
    bandwidth and ``prototype_bandwidth`` the sweep of the scale-0 pulse.
    """

    matrix: np.ndarray
    n_index: np.ndarray
    m_index: np.ndarray
    q: float
    N: int
    W: float
    T: float
    sample_rate: float
    band: float
    prototype_bandwidth: float
    carrier_hz: float
    spec: ChirpletSpec
    window: PhydyasWindow
    raw_energy: np.ndarray = field(repr=False, default=None)

    @property
    def waveforms(self) -> np.ndarray:
        return self.matrix.T

    @property
    def M_tot(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def delay(self) -> np.ndarray:
        return self.m_index / (self.q ** self.n_index * self.W)

    @property
    def scale(self) -> np.ndarray:
        return self.q ** self.n_index.astype(float)

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def prototype(self) -> np.ndarray:
        """The scale-0 waveform (column 0)."""
        return self.matrix[:, 0]

    def index(self, n: int, m: int) -> int:
        hit = np.flatnonzero((self.n_index == n) & (self.m_index == m))
        if hit.size == 0:
            raise KeyError((n, m))
        return int(hit[0])


def scale_counts(q: float, N: int) -> np.ndarray:
    """``M(n) = floor(q**n)`` for n = 0 .. N-1."""
    # tolerance so that 2.0**n lands on the integer
    return np.floor(float(q) ** np.arange(N) * (1 + 1e-12)).astype(int)


def build_bank(q: float, N: int, W: float, T: float, Fs: float,
               window: PhydyasWindow = PHYDYAS_K3, *, band: float | None = None,
               carrier_hz: float | None = None, n_samples: int | None = None) -> SubcarrierBank:
    """Build ``s_{m,n}(t) = q**(n/2) g(q**n (t - m / (q**n W)))``.

    The prototype sweeps ``[f1, f2] * f_unit`` where ``f_unit`` is chosen so
    that the ``N`` scales together occupy ``band`` Hz (default ``Fs/2``),
    i.e. the prototype bandwidth is ``band (q-1) / (q**N - 1)``.  The bank is
    shifted down by ``carrier_hz`` (default: the band centre) so it sits at
    complex baseband.  Columns are normalized to unit energy.
    """
    if q < 1 or N < 1:
        raise ValueError("need q >= 1 and N >= 1")
    if q == 1 and N != 1:
        raise ValueError("q = 1 requires N = 1")
    if W <= 0 or T <= 0 or Fs <= 0:
        raise ValueError("W, T and Fs must be positive")
    if band is None:
        band = Fs / 2
    if q > 1:
        wp = band * (q - 1) / (q ** N - 1)
        f_unit = wp / (math.sqrt(q) - 1 / math.sqrt(q))
    else:
        # single tone prototype: put it at the band centre
        wp = 0.0
        f_unit = band / 2
    spec = ChirpletSpec(q, T, Fs, f_unit)
    f_lo = spec.f1 * f_unit
    f_hi = q ** (N - 1) * spec.f2 * f_unit
    if carrier_hz is None:
        carrier_hz = 0.5 * (f_lo + f_hi)
    lo, hi = f_lo - carrier_hz, f_hi - carrier_hz
    if lo < -Fs / 2 or hi > Fs / 2:
        raise ValueError(
            f"bank occupies [{lo:.2f}, {hi:.2f}] Hz around the carrier, outside +-Fs/2")
    counts = scale_counts(q, N)
    n_idx = np.repeat(np.arange(N), counts)
    m_idx = np.concatenate([np.arange(c) for c in counts])
    starts = m_idx / (q ** n_idx * W)
    ends = starts + T / q ** n_idx
    if n_samples is None:
        n_samples = int(math.ceil(ends.max() * Fs - 1e-9))
    t = np.arange(n_samples) / Fs
    G = np.empty((n_samples, len(n_idx)), dtype=complex)
    for j, (n, m) in enumerate(zip(n_idx, m_idx)):
        s = q ** (n / 2) * prototype_at(spec, window, q ** n * (t - starts[j]))
        G[:, j] = s
    raw = np.sum(np.abs(G) ** 2, axis=0) / Fs
    G *= np.exp(-2j * np.pi * carrier_hz * t)[:, None]
    G /= np.linalg.norm(G, axis=0)[None, :]
    return SubcarrierBank(G, n_idx, m_idx, float(q), int(N), float(W), float(T), float(Fs),
                          float(band), float(wp), float(carrier_hz), spec, window, raw)


def cross_ambiguity(g_rx, r, tau: float, alpha: float, Fs: float,
                    carrier_hz: float = 0.0, taps: int = 31) -> complex:
    """Discrete ``sum_t conj(g_rx(alpha (t - tau))) sqrt(alpha) r(t)``.

    Both signals are baseband samples at ``Fs`` starting at ``t = 0``;
    ``carrier_hz`` is the physical frequency of baseband DC, so the value
    agrees with the ambiguity of the physical (passband) waveforms.
    ``g_rx`` is read between samples by band-limited interpolation.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = np.asarray(g_rx)
    r = np.asarray(r)
    lg = len(g)
    # output samples whose warped time falls on the pulse support
    d = tau * Fs
    lo = max(0, int(math.floor(d - taps / alpha)) - 1)
    hi = min(len(r), int(math.ceil(d + (lg + taps) / alpha)) + 1)
    if hi <= lo:
        return 0.0j
    n = np.arange(lo, hi)
    pos = alpha * (n - d)
    gw = sinc_interp(g, pos, taps)
    val = np.conj(gw) * r[lo:hi]
    if carrier_hz:
        t = n / Fs
        val = val * np.exp(-2j * np.pi * carrier_hz * (alpha * (t - tau) - t))
    return complex(math.sqrt(alpha) * val.sum())


@dataclass(frozen=True)
class AmbiguitySurface:
    """Samples of ``A(tau, alpha)`` on a delay x scale grid."""

    values: np.ndarray
    taus: np.ndarray
    alphas: np.ndarray


def ambiguity_surface(g_rx, g_tx, taus, alphas, Fs: float, carrier_hz: float = 0.0,
                      taps: int = 31) -> AmbiguitySurface:
    """Evaluate :func:`cross_ambiguity` over ``taus x alphas``."""
    taus = np.asarray(taus, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    out = np.empty((len(taus), len(alphas)), dtype=complex)
    for i, tau in enumerate(taus):
        for j, a in enumerate(alphas):
            out[i, j] = cross_ambiguity(g_rx, g_tx, tau, a, Fs, carrier_hz, taps)
    return AmbiguitySurface(out, taus, alphas)


def correlation_matrix(bank, workers: int = 1, block: int = 32) -> np.ndarray:
    """Gram matrix ``G^H G`` of the bank waveforms.

    Work is split in fixed column blocks so the result does not depend on
    the number of workers.
    """
    G = getattr(bank, "matrix", bank)
    G = np.asarray(G)
    if G.ndim != 2 or G.shape[1] == 0:
        raise ValueError("empty bank")
    K = G.shape[1]
    GH = G.conj().T
    out = np.empty((K, K), dtype=complex)
    spans = [(a, min(a + block, K)) for a in range(0, K, block)]

    def work(span):
        a, b = span
        out[:, a:b] = GH @ G[:, a:b]

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(work, spans))
    else:
        for s in spans:
            work(s)
    return out


def subcarrier_spectra(bank: SubcarrierBank, nfft: int | None = None):
    """Per-subcarrier power spectra on physical frequencies.

    Returns ``(freqs_hz, power_db)`` with ``power_db`` of shape
    ``M_tot x nfft``, normalized to the overall peak.
    """
    G = bank.matrix
    if nfft is None:
        nfft = 1 << int(math.ceil(math.log2(8 * G.shape[0])))
    S = np.fft.fftshift(np.fft.fft(G, nfft, axis=0), axes=0)
    f = np.fft.fftshift(np.fft.fftfreq(nfft, 1 / bank.sample_rate)) + bank.carrier_hz
    p = np.abs(S.T) ** 2
    p_db = 10 * np.log10(np.maximum(p / p.max(), 1e-30))
    return f, p_db


def write_waveforms(path, bank: SubcarrierBank) -> tuple[Path, Path]:
    """Write ``<path>.f32`` (interleaved little-endian float32) and ``<path>.txt``.

    The raw file stores the waveforms one after another, each as
    ``n_samples`` interleaved (re, im) pairs.
    """
    path = Path(path)
    raw = path.with_suffix(".f32")
    side = path.with_suffix(".txt")
    data = np.empty((bank.M_tot, bank.n_samples, 2), dtype="<f4")
    data[..., 0] = bank.matrix.T.real
    data[..., 1] = bank.matrix.T.imag
    raw.write_bytes(data.tobytes())
    lines = [
        f"sample_rate {bank.sample_rate!r}",
        f"duration {bank.duration!r}",
        f"n_samples {bank.n_samples}",
        f"count {bank.M_tot}",
        f"q {bank.q!r}",
        f"N {bank.N}",
        f"W {bank.W!r}",
        f"carrier_hz {bank.carrier_hz!r}",
        "format complex64-interleaved-le",
        "index n m delay_s scale",
    ]
    for j in range(bank.M_tot):
        lines.append(f"{j} {bank.n_index[j]} {bank.m_index[j]} "
                     f"{bank.delay[j]!r} {bank.scale[j]!r}")
    side.write_text("\n".join(lines) + "\n")
    return raw, side


def read_waveforms(path):
    """Read back :func:`write_waveforms` output as ``(matrix, header dict)``."""
    path = Path(path)
    side = path.with_suffix(".txt").read_text().splitlines()
    head = {}
    for line in side:
        key, _, val = line.partition(" ")
        if key == "index":
            break
        head[key] = val
    ns, cnt = int(head["n_samples"]), int(head["count"])
    data = np.frombuffer(path.with_suffix(".f32").read_bytes(), dtype="<f4")
    data = data.reshape(cnt, ns, 2)
    return (data[..., 0] + 1j * data[..., 1]).T, head
