"""Small numeric helpers: unit phases, compensated sums, torus distance,
seeded per-stage random streams."""

from __future__ import annotations

import hashlib
import math

import numpy as np


def e(x):
    """e(x) = exp(2*pi*i*x) with x reduced mod 1 before evaluation.

    Works on scalars and arrays. The mod-1 reduction keeps phases accurate
    for arguments much larger than 1.
    """
    arr = np.asarray(x, dtype=float)
    frac = arr - np.floor(arr)
    out = np.exp(2j * np.pi * frac)
    if out.ndim == 0:
        return complex(out)
    return out


def dist_to_int(x):
    """Distance to the nearest integer, the torus norm ||x||."""
    arr = np.asarray(x, dtype=float)
    d = np.abs(arr - np.round(arr))
    if d.ndim == 0:
        return float(d)
    return d


def fsum_real(values) -> float:
    """Exactly rounded sum of real values (compensated summation)."""
    arr = np.asarray(values, dtype=float)
    return math.fsum(arr.tolist())


def fsum_complex(values) -> complex:
    """Compensated sum of complex values (real/imag parts separately)."""
    arr = np.asarray(values, dtype=complex)
    return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))


def loglog_clamped(q: float, floor_below: float = 16.0) -> float:
    """log log q, clamped at 1 for q below `floor_below`.

    The clamp keeps reciprocal reference quantities like loglog(Q)/Q finite
    and monotone at small Q, where the double log dips below 1 (or 0).
    """
    if q < floor_below:
        return 1.0
    return max(math.log(math.log(q)), 1.0)


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Independent deterministic generator for (seed, label).

    The label is folded in through a stable hash so adding a stream to one
    stage never shifts the draws of another.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    tag = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))
