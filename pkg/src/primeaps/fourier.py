"""Exponential sums, Z_N transforms, torus-grid L^p norms, Fejer kernels,
and the trilinear 3AP form.

Conventions. The wedge transform is f^(theta) = sum_n f(n) e(n*theta) over
the ambient points of the measure. The Z_N transform is
f~(r) = sum_x f(x) e(-rx/N), i.e. exactly numpy's FFT sign, so the bridge
f~(r) = f^(-r/N) is an identity under the Z_N embedding of {1..N}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    GridConvergenceWarning,
    ParameterError,
    PreconditionError,
)
from .measures import Measure
from .numutil import dist_to_int, e, fsum_complex
from .sieve import FactorTable

REL_CONSISTENCY = 1e-3  # grid-doubling self-consistency contract (0.1%)
MAX_OVERSAMPLE = 16  # escalation cap before warning


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid j/M on the torus with M = oversample * N."""

    oversample: int = 8

    def __post_init__(self) -> None:
        if self.oversample < 2:
            raise ParameterError(f"oversample must be >= 2, got {self.oversample}")

    def points(self, N: int) -> int:
        return self.oversample * N


@dataclass
class Spectrum:
    """Z_N transform coefficients f~(0..N-1)."""

    N: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.coeffs.shape != (self.N,):
            raise ParameterError(
                f"coeffs must have shape ({self.N},), got {self.coeffs.shape}"
            )


def exp_sum(f: Measure, theta: float) -> complex:
    """f^(theta) = sum over the support of f(n) e(n*theta), compensated."""
    idx = np.flatnonzero(f.weights)
    pos = f.positions()[idx]
    return fsum_complex(f.weights[idx] * e(pos * theta))


def dft(f: Measure) -> Spectrum:
    """f~(r) = sum_x f(x) e(-rx/N) on Z_N (the {1..N} case is embedded)."""
    return Spectrum(f.N, np.fft.fft(f.zn_weights()))


def idft(spec: Spectrum) -> np.ndarray:
    """Inverse of dft; returns the Z_N weight array."""
    return np.fft.ifft(spec.coeffs)


def wedge_grid(positions: np.ndarray, values: np.ndarray, M: int) -> np.ndarray:
    """Evaluate sum_n v_n e(n * j/M) for j = 0..M-1 via one length-M FFT.

    positions must be distinct mod M (true whenever they span fewer than M
    consecutive integers).
    """
    pad = np.zeros(M, dtype=np.complex128)
    pad[np.asarray(positions) % M] = values
    return M * np.fft.ifft(pad)


def measure_wedge_grid(f: Measure, M: int) -> np.ndarray:
    idx = np.flatnonzero(f.weights)
    return wedge_grid(f.positions()[idx], f.weights[idx], M)


def _lp_from_grid(positions, values, N: int, p: float, oversample: int) -> float:
    vals = wedge_grid(positions, values, oversample * N)
    return float(np.mean(np.abs(vals) ** p) ** (1.0 / p))


def _lp_norm_checked(positions, values, N, p, grid: TorusGrid) -> float:
    """Torus L^p norm with the grid-doubling self-consistency ladder.

    Doubles the oversample until two consecutive grids agree to 0.1%; if
    the pair at oversample 16 still disagrees, a GridConvergenceWarning is
    issued and the finest value returned.
    """
    o = grid.oversample
    cur = _lp_from_grid(positions, values, N, p, o)
    while True:
        nxt = _lp_from_grid(positions, values, N, p, 2 * o)
        scale = max(abs(nxt), 1e-300)
        if abs(cur - nxt) / scale < REL_CONSISTENCY:
            return nxt
        if o >= MAX_OVERSAMPLE:
            warnings.warn(
                f"L^{p} grid norm not self-consistent at oversample {o} "
                f"(rel diff {abs(cur - nxt) / scale:.2e})",
                GridConvergenceWarning,
                stacklevel=3,
            )
            return nxt
        o *= 2
        cur = nxt


def lp_norm_torus(f: Measure, p: float, grid: TorusGrid) -> float:
    """(integral over the torus of |f^|^p)^(1/p) by uniform-grid quadrature."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    idx = np.flatnonzero(f.weights)
    return _lp_norm_checked(f.positions()[idx], f.weights[idx], f.N, p, grid)


def tau(theta: float, N: int) -> complex:
    """tau(theta) = N^(-1) sum_{n=1..N} e(n*theta).

    Geometric closed form away from integers; direct series fallback when
    e(theta) is within 1e-8 of 1.
    """
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    u = theta - math.floor(theta)
    X = e(u)
    if abs(X - 1.0) < 1e-8:
        v = u if u <= 0.5 else u - 1.0
        return complex(np.sum(e(np.arange(1, N + 1) * v))) / N
    XN = e(math.fmod(N * u, 1.0))
    return X * (XN - 1.0) / (X - 1.0) / N


def fejer(theta: float, N: int) -> float:
    """Fejer kernel K_N(theta) = N^(-1) (sin(pi N theta)/sin(pi theta))^2.

    K_N(0) = N, K_N >= 0, and the torus integral is exactly 1.
    """
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    u = dist_to_int(theta)
    s = math.sin(math.pi * u)
    if s == 0.0:
        return float(N)
    sN = math.sin(math.pi * math.fmod(N * u, 1.0))
    return (sN * sN) / (s * s) / N


def mz_ratio(f: Measure, p: float, grid: TorusGrid) -> float:
    """sum_r |f^(r/N)|^p divided by N * integral |f^(theta)|^p dtheta.

    The discrete-to-continuous comparison behind the dual restriction
    estimates; equals 1 exactly at p=2 by Parseval on both sides.
    """
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    coeffs = np.fft.fft(f.zn_weights())
    num = float(np.sum(np.abs(coeffs) ** p))
    den = f.N * lp_norm_torus(f, p, grid) ** p
    if den == 0.0:
        raise DegenerateInputError("zero measure has no mz ratio")
    return num / den


def triple_count(f: Measure, g: Measure, h: Measure) -> float:
    """sum over x, d in Z_N of f(x) g(x+d) h(x+2d), d=0 included.

    Spectral form N^(-1) sum_r f~(r) g~(-2r) h~(r); all three measures
    must share N.
    """
    if not (f.N == g.N == h.N):
        raise ParameterError("measures must share N")
    N = f.N
    F = np.fft.fft(f.zn_weights())
    G = np.fft.fft(g.zn_weights())
    H = np.fft.fft(h.zn_weights())
    idx = (-2 * np.arange(N)) % N
    val = np.sum(F * H * G[idx]) / N
    return float(val.real)


def majorant_ratio(
    signs: np.ndarray,
    p: float,
    N: int,
    table: FactorTable,
    grid: TorusGrid,
) -> float:
    """|| sum over primes n <= N of a_n e(n theta) ||_p divided by the same
    norm with all a_n = 1. Requires |a_n| <= 1 (majorized coefficients)."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    primes = table.primes_up_to(N)
    signs = np.asarray(signs, dtype=np.complex128)
    if signs.shape != primes.shape:
        raise ParameterError(
            f"need one coefficient per prime <= {N} ({primes.size}), got {signs.size}"
        )
    if signs.size == 0:
        raise DegenerateInputError(f"no primes <= {N}")
    if float(np.max(np.abs(signs))) > 1.0 + 1e-12:
        raise PreconditionError("majorant coefficients must satisfy |a_n| <= 1")
    num = _lp_norm_checked(primes, signs, N, p, grid)
    den = _lp_norm_checked(primes, np.ones_like(signs), N, p, grid)
    return num / den


def restriction_ratio(
    fvals: np.ndarray,
    p: float,
    lam: Measure,
    grid: TorusGrid,
) -> float:
    """||(f lambda)^||_p * N^(1/p) / ||f||_{L^2(d lambda)}.

    fvals holds f on the support of lam (in ascending support order); the
    empirical restriction constant is the sup of this over ||f|| <= 1.
    """
    if not p > 2:
        raise ParameterError(f"p must be > 2, got {p}")
    idx = np.flatnonzero(lam.weights)
    if idx.size == 0:
        raise DegenerateInputError("lambda has empty support")
    fvals = np.asarray(fvals, dtype=np.complex128)
    if fvals.shape != idx.shape:
        raise ParameterError(
            f"need one value per support point ({idx.size}), got {fvals.size}"
        )
    wsup = lam.weights[idx]
    l2 = math.sqrt(math.fsum((np.abs(fvals) ** 2 * wsup).tolist()))
    if l2 == 0.0:
        raise DegenerateInputError("f vanishes in L^2(d lambda)")
    norm = _lp_norm_checked(lam.positions()[idx], fvals * wsup, lam.N, p, grid)
    return norm * lam.N ** (1.0 / p) / l2


def spectrum_to_rows(spec: Spectrum) -> list[tuple[int, float, float]]:
    """(r, re, im) rows for CSV export."""
    return [
        (int(r), float(c.real), float(c.imag))
        for r, c in enumerate(spec.coeffs)
    ]
