"""Major/minor arc machinery: Dirichlet rational approximation, arc
classification at the (log N)^B cutoff, closed-form major-arc predictions,
empirical sup-difference scans, and the minor-arc bound formulas.

All bound formulas are evaluated with implicit constant 1; tests compare
them against measured quantities and report fitted constants rather than
asserting the asymptotic inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import measures
from .errors import DomainError, ParameterError
from .fourier import TorusGrid, measure_wedge_grid, tau
from .numutil import dist_to_int, loglog_clamped
from .sieve import FactorTable

MAJOR = "major"
MINOR = "minor"


@dataclass(frozen=True)
class RationalApprox:
    a: int
    q: int
    err: float


@dataclass(frozen=True)
class ArcParams:
    """Arc geometry at scale N with exponent p: A = 4/(p-2), B = 2A + 20.

    b_override replaces B for experiments; both values are stamped into
    results so overridden runs are recognizable.
    """

    N: int
    p_exponent: float
    b_override: float | None = None

    def __post_init__(self) -> None:
        if self.N < 3:
            raise ParameterError(f"N must be >= 3, got {self.N}")
        if not self.p_exponent > 2:
            raise ParameterError(f"p_exponent must be > 2, got {self.p_exponent}")
        if self.b_override is not None and self.b_override <= 0:
            raise ParameterError(f"b_override must be > 0, got {self.b_override}")

    @property
    def A(self) -> float:
        return 4.0 / (self.p_exponent - 2.0)

    @property
    def B_formula(self) -> float:
        return 2.0 * self.A + 20.0

    @property
    def B(self) -> float:
        return self.b_override if self.b_override is not None else self.B_formula

    @property
    def q_cutoff(self) -> float:
        """Denominator cutoff (log N)^B separating major from minor."""
        return math.log(self.N) ** self.B

    @property
    def Qmax(self) -> int:
        """Dirichlet denominator bound floor(N (log N)^-B), floored at 1."""
        return max(1, math.floor(self.N / self.q_cutoff))

    @property
    def degenerate(self) -> bool:
        """True when the major-arc cutoff swallows the Dirichlet range,
        i.e. (log N)^(2B) >= N; every theta is then 'major'."""
        return self.q_cutoff >= self.Qmax


@dataclass(frozen=True)
class ArcLabel:
    kind: str
    approx: RationalApprox
    degenerate: bool = False

    @property
    def a(self) -> int:
        return self.approx.a

    @property
    def q(self) -> int:
        return self.approx.q


def _convergent_up_to(x: Fraction, qmax: int) -> Fraction:
    """Last continued-fraction convergent of x with denominator <= qmax."""
    p0, q0 = 1, 0
    p1, q1 = int(math.floor(x)), 1
    frac = x - math.floor(x)
    while frac != 0 and q1 <= qmax:
        frac = 1 / frac
        a = int(math.floor(frac))
        frac -= a
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q0 + a * q1
        if q1 > qmax:
            return Fraction(p0, q0)
    return Fraction(p1, q1)


def dirichlet_approx(theta: float, qmax: int) -> RationalApprox:
    """Best rational a/q with q <= qmax; always satisfies the Dirichlet
    guarantee |theta - a/q| <= 1/(q*qmax).

    Uses the stdlib continued-fraction best approximation; in the rare
    case the closest fraction misses the guarantee, the plain convergent
    (which always satisfies it) is returned instead. Exact arithmetic.
    """
    if qmax < 1:
        raise ParameterError(f"qmax must be >= 1, got {qmax}")
    x = Fraction(theta)
    best = x.limit_denominator(qmax)
    if abs(x - best) * best.denominator * qmax > 1:
        best = _convergent_up_to(x, qmax)
    return RationalApprox(
        a=best.numerator, q=best.denominator, err=float(abs(x - best))
    )


def classify(theta: float, params: ArcParams) -> ArcLabel:
    """Label theta Major when its Dirichlet denominator is <= (log N)^B."""
    approx = dirichlet_approx(theta, params.Qmax)
    kind = MAJOR if approx.q <= params.q_cutoff else MINOR
    return ArcLabel(kind=kind, approx=approx, degenerate=params.degenerate)


def major_prediction(
    kind: str,
    theta: float,
    label: ArcLabel,
    mparams: measures.MeasureParams,
    table: FactorTable,
) -> complex:
    """Closed-form major-arc main term q^(-1) sigma_{a,q} tau(theta - a/q).

    kind selects the measure family ("prime" or "rough"; rough needs Q in
    mparams). Raises DomainError on minor-arc labels.
    """
    if label.kind != MAJOR:
        raise DomainError("major_prediction needs a major-arc label")
    a, q = label.a, label.q
    sig = measures.sigma_aq(kind, a % q if q > 1 else 0, q, mparams, table)
    return sig / q * tau(theta - a / q, mparams.N)


@dataclass(frozen=True)
class ProfileRow:
    theta: float
    re: float
    im: float
    abs: float
    arc_kind: str
    a: int
    q: int


@dataclass
class ScanResult:
    """Outcome of a sup-difference scan |lambda^ - lambda^{(Q)^}| over the
    oversampled grid."""

    sup: float
    argmax_theta: float
    argmax_label: ArcLabel
    theta0_mass_diff: float
    reference: float
    Q: int
    oversample: int
    profile: list[ProfileRow] = field(repr=False)
    sup_major_profiled: float | None = None
    sup_minor_profiled: float | None = None


def sup_diff_scan(
    mparams: measures.MeasureParams,
    grid: TorusGrid,
    table: FactorTable,
    arc_params: ArcParams | None = None,
    profile_points: int = 2048,
) -> ScanResult:
    """Scan |lambda^(theta) - lambda^{(Q)^}(theta)| over theta = j/M.

    Returns the grid sup with its classified argmax, the theta=0 mass
    mismatch, the loglog(Q)/Q reference, and a decimated classified
    profile (classification is done per profiled point, not for all M).
    """
    Q = mparams.require_Q()
    N = mparams.N
    if arc_params is None:
        arc_params = ArcParams(N=N, p_exponent=mparams.p_exponent or 3.0)
    lam = measures.lambda_measure(mparams, table)
    lamq = measures.lambda_q_measure(mparams, table)
    M = grid.points(N)
    diff = measure_wedge_grid(lam, M) - measure_wedge_grid(lamq, M)
    absdiff = np.abs(diff)
    j_star = int(np.argmax(absdiff))
    sup = float(absdiff[j_star])
    stride = max(1, M // profile_points)
    idx = np.arange(0, M, stride, dtype=np.int64)
    if j_star not in idx:
        idx = np.sort(np.append(idx, j_star))
    rows: list[ProfileRow] = []
    sup_major = None
    sup_minor = None
    for j in idx:
        theta = j / M
        lab = classify(theta, arc_params)
        val = diff[j]
        row = ProfileRow(
            theta=theta,
            re=float(val.real),
            im=float(val.imag),
            abs=float(absdiff[j]),
            arc_kind=lab.kind,
            a=lab.a,
            q=lab.q,
        )
        rows.append(row)
        if lab.kind == MAJOR:
            sup_major = row.abs if sup_major is None else max(sup_major, row.abs)
        else:
            sup_minor = row.abs if sup_minor is None else max(sup_minor, row.abs)
    return ScanResult(
        sup=sup,
        argmax_theta=j_star / M,
        argmax_label=classify(j_star / M, arc_params),
        theta0_mass_diff=float(absdiff[0]),
        reference=loglog_clamped(Q) / Q,
        Q=Q,
        oversample=grid.oversample,
        profile=rows,
        sup_major_profiled=sup_major,
        sup_minor_profiled=sup_minor,
    )


def minor_bound_lambda(theta: float, q: int, N: int, m: int | None = None) -> float:
    """(log N)^10 (q^(-1/2) + N^(-1/5) + N^(-1/2) q^(1/2)).

    Pure formula with implicit constant 1; theta and m are part of the
    contract shape (the bound holds for |theta - a/q| <= 1/q^2) but do
    not enter the value.
    """
    if N < 3 or q < 1:
        raise ParameterError("need N >= 3 and q >= 1")
    lg = math.log(N)
    return lg**10 * (q**-0.5 + N**-0.2 + math.sqrt(q / N))


def minor_bound_rough(theta: float, q: int, N: int, A: float) -> float:
    """(log N)^3 (q^(-1) + q/N + N^(-1/(8A)))."""
    if N < 3 or q < 1:
        raise ParameterError("need N >= 3 and q >= 1")
    if A <= 0:
        raise ParameterError(f"A must be > 0, got {A}")
    lg = math.log(N)
    return lg**3 * (1.0 / q + q / N + N ** (-1.0 / (8.0 * A)))


@dataclass(frozen=True)
class WeylSum:
    value: float
    bound: float
    q: int


def weyl_min_sum(theta: float, N: int, m: int) -> WeylSum:
    """sum over n <= sqrt(N) of min(||theta n||^(-1), 2mN/n), evaluated
    exactly, next to the (log N)^3 (sqrt(N) + q + N/q) reference with q
    the Dirichlet denominator of theta at cutoff sqrt(N)."""
    if N < 3:
        raise ParameterError(f"N must be >= 3, got {N}")
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    top = math.isqrt(N)
    n = np.arange(1, top + 1, dtype=np.float64)
    d = dist_to_int(theta * n)
    cap = 2.0 * m * N / n
    with np.errstate(divide="ignore"):
        inv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), np.inf)
    value = float(np.sum(np.minimum(inv, cap)))
    q = dirichlet_approx(theta, max(1, top)).q
    bound = math.log(N) ** 3 * (math.sqrt(N) + q + N / q)
    return WeylSum(value=value, bound=bound, q=q)


def interpolated_piece_bound(j: int, K: int, N: int, p: float) -> float:
    """Interpolated L^p bound for the j-th dyadic piece.

    j <= K: j^(2/p) (log j)^(1-2/p) 2^(-(1-2/p) j) N^(-2/p), with log j
    floored at 1 (relevant at j=1 where it would vanish).
    j = K+1: (log N)^(-1/p) N^(-2/p).
    """
    if not p > 2:
        raise ParameterError(f"p must be > 2, got {p}")
    if N < 3:
        raise ParameterError(f"N must be >= 3, got {N}")
    if not 1 <= j <= K + 1:
        raise ParameterError(f"j={j} outside 1..{K + 1}")
    if j == K + 1:
        return math.log(N) ** (-1.0 / p) * N ** (-2.0 / p)
    t = 1.0 - 2.0 / p
    logj = max(math.log(j), 1.0)
    return j ** (2.0 / p) * logj**t * 2.0 ** (-t * j) * N ** (-2.0 / p)
