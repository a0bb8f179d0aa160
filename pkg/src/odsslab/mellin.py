"""Discrete Mellin transform on geometric (q-adic) sampling grids.

A signal on the positive scale axis is sampled at the points ``q**n`` for
``n = J .. J+N-1``.  Warping with the weight ``q**(n/2)`` turns the Mellin
transform into an ordinary N-point discrete Fourier transform, which is what
the functions below compute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometricGrid",
    "MellinSpectrum",
    "min_transform_length",
    "forward_dmt",
    "inverse_dmt",
    "dilate",
    "synthesize",
    "remap_coefficients",
]


@dataclass(frozen=True)
class GeometricGrid:
    """Geometric sampling grid ``q**n``, ``n = J .. J+N-1``.

    ``alpha_lo``/``alpha_hi`` describe the scale support of the signal.  The
    dilatocycling ratio ``Q = q**N`` must cover that support.
    """

    q: float
    N: int
    J: int = 0
    alpha_lo: float = 1.0
    alpha_hi: float = 1.0

    def __post_init__(self):
        if self.N < 1 or int(self.N) != self.N:
            raise ValueError("N must be a positive integer")
        if self.q <= 0:
            raise ValueError("q must be positive")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.q == 1 and self.N != 1:
            raise ValueError("q = 1 is only valid with N = 1")
        if not (0 < self.alpha_lo <= self.alpha_hi):
            raise ValueError("need 0 < alpha_lo <= alpha_hi")
        # small slack for round-off in q**N
        if self.Q * (1 + 1e-12) < self.alpha_hi / self.alpha_lo:
            raise ValueError("q**N does not cover the scale support (scale aliasing)")

    @classmethod
    def for_support(cls, q: float, alpha_lo: float, alpha_hi: float, N: int | None = None):
        """Grid starting at ``floor(ln alpha_lo / ln q)`` that covers the support.

        When ``N`` is not given the smallest alias-free length is used.
        """
        if alpha_lo <= 0 or alpha_hi <= 0:
            raise ValueError("scale endpoints must be positive")
        if q == 1:
            return cls(1.0, 1, 0, alpha_lo, alpha_hi)
        lq = math.log(q)
        J = math.floor(math.log(alpha_lo) / lq + 1e-12)
        if N is None:
            N = max(1, math.ceil(math.log(alpha_hi / alpha_lo) / lq - 1e-12))
        return cls(float(q), int(N), int(J), alpha_lo, alpha_hi)

    @property
    def Q(self) -> float:
        return float(self.q) ** self.N

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.J, self.J + self.N)

    @property
    def points(self) -> np.ndarray:
        return float(self.q) ** self.indices.astype(float)


@dataclass(frozen=True)
class MellinSpectrum:
    """One period of a discrete Mellin spectrum, ``beta_k = k / ln Q``."""

    coeffs: np.ndarray
    beta_lo: float = 0.0
    beta_hi: float = 0.0

    @property
    def N(self) -> int:
        return len(self.coeffs)


def min_transform_length(beta_span: float, alpha_lo: float, alpha_hi: float) -> int:
    """Smallest N with ``N >= beta_span * ln(alpha_hi / alpha_lo)``, at least 1."""
    if alpha_lo <= 0 or alpha_hi <= 0:
        raise ValueError("scale endpoints must be positive")
    if alpha_lo > alpha_hi:
        raise ValueError("need alpha_lo <= alpha_hi")
    if beta_span < 0:
        raise ValueError("beta_span must be non-negative")
    need = beta_span * math.log(alpha_hi / alpha_lo)
    # guard against 10.000000000000002 style round-off
    n = math.ceil(need - 1e-9 * max(1.0, need))
    return max(1, int(n))


def _phase(grid: GeometricGrid, sign: float) -> np.ndarray:
    k = np.arange(grid.N)
    return np.exp(sign * 2j * np.pi * grid.J * k / grid.N)


def forward_dmt(samples, grid: GeometricGrid) -> MellinSpectrum:
    """Discrete Mellin transform of samples ``x_d(q**n)`` on ``grid``.

    ``coeffs[k] = sum_n q**(n/2) x_d(q**n) exp(j 2 pi n k / N)``.
    """
    x = np.asarray(samples, dtype=complex)
    if x.shape != (grid.N,):
        raise ValueError(f"expected {grid.N} samples, got shape {x.shape}")
    w = np.sqrt(grid.points) * x
    # sum_i w_i e^{+j2pi i k/N} = N * ifft(w)
    c = grid.N * np.fft.ifft(w) * _phase(grid, +1.0)
    if grid.q > 1:
        lQ = math.log(grid.Q)
        span = (0.0, (grid.N - 1) / lQ)
    else:
        span = (0.0, 0.0)
    return MellinSpectrum(c, *span)


def inverse_dmt(spectrum, grid: GeometricGrid) -> np.ndarray:
    """Inverse of :func:`forward_dmt`.

    ``x_d(q**n) = q**(-n/2) / N * sum_k coeffs[k] exp(-j 2 pi k n / N)``.
    """
    c = np.asarray(getattr(spectrum, "coeffs", spectrum), dtype=complex)
    if c.shape != (grid.N,):
        raise ValueError(f"expected {grid.N} coefficients, got shape {c.shape}")
    w = np.fft.fft(c * _phase(grid, -1.0)) / grid.N
    return w / np.sqrt(grid.points)


def dilate(samples, grid: GeometricGrid, steps: int = 1) -> np.ndarray:
    """Geometric dilation ``q**(s/2) x_d(q**(n+s))`` of a dilatocycled signal.

    The samples are treated as one period of a signal obeying
    ``x_d(Q a) = Q**(-1/2) x_d(a)``, so the shift wraps around.
    """
    x = np.asarray(samples, dtype=complex)
    w = np.sqrt(grid.points) * x
    w = np.roll(w, -steps)
    return w / np.sqrt(grid.points)


def synthesize(coeffs: dict, grid: GeometricGrid) -> np.ndarray:
    """Sample ``a**-1/2 / N sum_k c_k exp(-j 2 pi k ln(a) / ln Q)`` on the grid.

    ``coeffs`` maps integer Mellin indices ``k`` (``beta = k / ln Q``) to
    values.  Indices need not lie in ``0 .. N-1``; when they span more than
    N consecutive integers the sampled signal is aliased.
    """
    n = grid.indices
    out = np.zeros(grid.N, dtype=complex)
    for k, c in coeffs.items():
        out += c * np.exp(-2j * np.pi * k * n / grid.N)
    return out / (grid.N * np.sqrt(grid.points))


def remap_coefficients(spectrum, K: int) -> np.ndarray:
    """Reorder one canonical period to Mellin indices ``K .. K+N-1``."""
    c = np.asarray(getattr(spectrum, "coeffs", spectrum))
    N = len(c)
    return c[(np.arange(K, K + N)) % N]
