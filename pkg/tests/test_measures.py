import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primeaps.errors import ParameterError, PreconditionError, TableRangeError
from primeaps import measures, sieve
from primeaps.measures import KIND_PRIME, KIND_ROUGH, Measure, MeasureParams


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _prime_factors(n):
    out = set()
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.add(d)
            n //= d
        d += 1
    if n > 1:
        out.add(n)
    return out


# --- the measures themselves -------------------------------------------------

def test_lambda_weights_formula(small_table):
    b, m, N = 2, 3, 400
    params = MeasureParams(b=b, m=m, N=N)
    lam = measures.lambda_measure(params, small_table)
    phi_m = sieve.euler_phi(m, small_table)
    for n in range(1, N + 1):
        v = m * n + b
        expect = phi_m * math.log(v) / (m * N) if _is_prime(v) else 0.0
        assert lam.weight_at(n) == pytest.approx(expect, abs=1e-15)


def test_lambda_mass_near_one(table):
    for b, m in [(1, 1), (1, 2)]:
        params = MeasureParams(b=b, m=m, N=100_000)
        lam = measures.lambda_measure(params, table)
        assert 0.93 <= lam.total <= 1.07


def test_lambda_q_uniform_on_rough_support(small_table):
    params = MeasureParams(b=1, m=2, N=500, Q=8)
    lamq = measures.lambda_q_measure(params, small_table)
    pref = measures.rough_prefactor(8, 2, small_table)
    sup = sieve.rough_support(1, 2, 500, 8, small_table)
    expect = np.zeros(500)
    expect[sup.members - 1] = pref / 500.0
    assert np.allclose(lamq.weights, expect, rtol=0, atol=1e-15)


def test_lambda_one_is_zero_measure(small_table):
    params = MeasureParams(b=1, m=2, N=100, Q=1)
    lamq = measures.lambda_q_measure(params, small_table)
    assert lamq.total == 0.0
    assert np.all(lamq.weights == 0.0)


def test_rough_mass_near_one(table):
    # the Mertens prefactor normalizes the rough counts; the error grows
    # with Q (Mertens + Chebyshev second-order terms), still small here
    for Q, tol in [(4, 0.001), (64, 0.01), (1024, 0.05)]:
        params = MeasureParams(b=1, m=1, N=500_000, Q=Q)
        lamq = measures.lambda_q_measure(params, table)
        assert lamq.total == pytest.approx(1.0, abs=tol)


# --- dyadic decomposition ----------------------------------------------------

def test_dyadic_cutoff_minimal():
    for N, A in [(1000, 2.0), (10**6, 4.0), (50, 1.0)]:
        K = measures.dyadic_cutoff(N, A)
        x = math.log(N) ** A / 10.0
        assert 2.0**K > x
        assert K == 0 or 2.0 ** (K - 1) <= x


def test_dyadic_telescopes_exactly(table):
    cases = [
        (1, 1, 2_000, 3.0),
        (1, 2, 5_000, 2.5),
        (2, 3, 10_000, 4.0),
        (5, 6, 1_000, 6.0),
    ]
    for b, m, N, p in cases:
        params = MeasureParams(b=b, m=m, N=N, p_exponent=p)
        pieces, K = measures.dyadic_pieces(params, table)
        assert len(pieces) == K + 1
        lam = measures.lambda_measure(params, table)
        recon = np.zeros(N)
        for piece in pieces:
            assert piece.signed
            recon += piece.weights
        assert np.max(np.abs(recon - lam.weights)) <= 1e-12


def test_dyadic_needs_table(small_table):
    params = MeasureParams(b=1, m=1, N=10_000, p_exponent=2.5)
    with pytest.raises(TableRangeError):
        measures.dyadic_pieces(params, small_table)


def test_piece_sup_norms_shape(table):
    params = MeasureParams(b=1, m=2, N=3_000, p_exponent=4.0)
    pieces, K = measures.dyadic_pieces(params, table)
    norms = measures.piece_sup_norms(pieces)
    assert [n.j for n in norms] == list(range(1, K + 2))
    for n in norms:
        assert n.sup >= 0.0
        assert n.reference > 0.0


# --- local densities ---------------------------------------------------------

def test_gamma_prime_formula(small_table):
    params = MeasureParams(b=1, m=2, N=100)
    for q in (1, 2, 3, 10, 36):
        for r in range(q):
            got = measures.gamma_rq(KIND_PRIME, r, q, params, small_table)
            if math.gcd(2 * r + 1, 2 * q) == 1:
                expect = (
                    sieve.euler_phi(2, small_table)
                    * q
                    / sieve.euler_phi(2 * q, small_table)
                )
            else:
                expect = 0.0
            assert got == pytest.approx(expect, rel=1e-14)


def test_gamma_rough_formula(small_table):
    params = MeasureParams(b=2, m=3, N=100, Q=8)
    pref = measures.rough_prefactor(8, 3, small_table)
    for q in (1, 2, 5, 12):
        for r in range(q):
            got = measures.gamma_rq(KIND_ROUGH, r, q, params, small_table)
            g = math.gcd(3 * r + 2, 3 * q)
            if all(p > 8 for p in _prime_factors(g)):
                expect = pref * sieve.mertens_product(8, 3 * q, small_table)
            else:
                expect = 0.0
            assert got == pytest.approx(expect, rel=1e-14), (q, r)


def test_gamma_rough_zero_at_Q1(small_table):
    params = MeasureParams(b=1, m=1, N=100, Q=1)
    for q in (1, 2, 5):
        for r in range(q):
            assert measures.gamma_rq(KIND_ROUGH, r, q, params, small_table) == 0.0


@given(
    q=st.integers(min_value=1, max_value=60),
    r=st.integers(min_value=0, max_value=59),
    b=st.integers(min_value=0, max_value=6),
    m=st.integers(min_value=1, max_value=6),
    Q=st.integers(min_value=1, max_value=32),
)
@settings(max_examples=150, deadline=None)
def test_gamma_bounded_by_q(small_table, q, r, b, m, Q):
    if math.gcd(b, m) != 1 or r >= q:
        return
    params = MeasureParams(b=b, m=m, N=100, Q=Q)
    for kind in (KIND_PRIME, KIND_ROUGH):
        gam = measures.gamma_rq(kind, r, q, params, small_table)
        assert 0.0 <= gam <= q + 1e-12


def test_empirical_gamma_tracks_gamma(table):
    params = MeasureParams(b=1, m=1, N=1_000_000)
    lam = measures.lambda_measure(params, table)
    for r, q in [(1, 3), (2, 3), (2, 4), (1, 4), (3, 4)]:
        gam = measures.gamma_rq(KIND_PRIME, r, q, params, table)
        emp = measures.empirical_gamma(lam, r, q)
        if gam == 0.0:
            # n+1 shares a factor with q along these residues: no mass
            assert emp < 0.01, (r, q, emp)
        else:
            assert emp == pytest.approx(gam, abs=0.12), (r, q, gam, emp)


def test_empirical_gamma_validation(small_table):
    params = MeasureParams(b=1, m=2, N=100)
    lam = measures.lambda_measure(params, small_table)
    with pytest.raises(ParameterError):
        measures.empirical_gamma(lam, 0, 5)
    with pytest.raises(ParameterError):
        measures.empirical_gamma(lam, 1, 5, L=30)


# --- sigma closed forms ------------------------------------------------------

def test_sigma_closed_vs_direct_spot(small_table):
    for kind in (KIND_PRIME, KIND_ROUGH):
        for b, m, q, Q in [(1, 1, 12, 8), (2, 3, 7, 4), (1, 6, 25, 32), (5, 2, 9, 16)]:
            params = MeasureParams(b=b, m=m, N=200, Q=Q)
            direct = measures.sigma_aq_direct_all(kind, q, params, small_table)
            for a in range(q):
                if math.gcd(a, q) != 1:
                    continue
                closed = measures.sigma_aq(kind, a, q, params, small_table)
                assert abs(closed - direct[a]) < 1e-10


def test_sigma_gates(small_table):
    # (m, q) sharing a factor kills the prime closed form
    params = MeasureParams(b=1, m=2, N=100, Q=4)
    assert measures.sigma_aq(KIND_PRIME, 1, 4, params, small_table) == 0
    # mu(q) = 0 kills it too
    assert measures.sigma_aq(KIND_PRIME, 1, 9, params, small_table) == 0
    # rough kind needs q to be Q-smooth
    assert measures.sigma_aq(KIND_ROUGH, 1, 5, params, small_table) == 0
    assert measures.sigma_aq(KIND_ROUGH, 2, 3, params, small_table) != 0
    # Q = 1 is the zero measure
    p1 = MeasureParams(b=1, m=2, N=100, Q=1)
    assert measures.sigma_aq(KIND_ROUGH, 2, 3, p1, small_table) == 0


def test_sigma_requires_coprime_a(small_table):
    params = MeasureParams(b=1, m=1, N=100)
    with pytest.raises(PreconditionError):
        measures.sigma_aq(KIND_PRIME, 2, 4, params, small_table)


def test_sigma_q1_is_one(small_table):
    # q = 1: sigma = 1 for the prime measure (empty phase, mu(1)=phi(1)=1)
    params = MeasureParams(b=1, m=1, N=100)
    assert measures.sigma_aq(KIND_PRIME, 0, 1, params, small_table) == pytest.approx(1.0)


# --- Brun truncation ---------------------------------------------------------

def test_brun_completes_to_product(small_table):
    params = MeasureParams(b=1, m=1, N=100)
    est = measures.brun_truncated(0, 2, 10, 7, 3, params, small_table)
    # t = number of primes <= 7 not dividing q: {3, 5, 7} -> exact
    assert est.estimate == pytest.approx(est.full_product, rel=1e-12)
    assert not est.gated_zero


def test_brun_truncations_alternate(small_table):
    params = MeasureParams(b=1, m=1, N=100)
    full = measures.brun_truncated(1, 1, 10, 13, 6, params, small_table).full_product
    for t in range(0, 6):
        est = measures.brun_truncated(1, 1, 10, 13, t, params, small_table)
        if t % 2 == 0:
            assert est.estimate >= full - 1e-12
        else:
            assert est.estimate <= full + 1e-12


def test_brun_gated_zero(small_table):
    # m*r + b divisible by 3 <= Q: exact zero, flagged
    params = MeasureParams(b=1, m=1, N=100)
    est = measures.brun_truncated(2, 3, 10, 7, 2, params, small_table)
    assert est.gated_zero
    assert est.estimate == 0.0


def test_brun_depth_guard(small_table):
    params = MeasureParams(b=1, m=1, N=100)
    with pytest.raises(ParameterError):
        measures.brun_truncated(1, 1, 10, 100, 7, params, small_table)
    # deep k with shallow t is allowed
    est = measures.brun_truncated(1, 1, 10, 100, 3, params, small_table)
    assert est.num_primes == 25


def test_default_brun_depth():
    N = 10**6
    raw = math.log(N) / (2 * 8.0 * math.log(math.log(N)))
    assert measures.default_brun_depth(N, 8.0) == max(1, math.floor(raw))


# --- Measure plumbing --------------------------------------------------------

def test_measure_validation():
    with pytest.raises(PreconditionError):
        Measure(3, np.array([0.1, -0.2, 0.3]))
    Measure(3, np.array([0.1, -0.2, 0.3]), signed=True)
    with pytest.raises(ParameterError):
        Measure(4, np.array([0.1, 0.2]))
    with pytest.raises(ParameterError):
        Measure(2, np.array([0.1, 0.2]), base="bad")


def test_measure_params_validation():
    with pytest.raises(PreconditionError):
        MeasureParams(b=2, m=4, N=100)
    with pytest.raises(ParameterError):
        MeasureParams(b=1, m=1, N=0)
    with pytest.raises(ParameterError):
        MeasureParams(b=1, m=1, N=100, Q=0)
    with pytest.raises(ParameterError):
        MeasureParams(b=1, m=1, N=100, p_exponent=2.0)
    assert MeasureParams(b=1, m=1, N=100, p_exponent=4.0).A == 2.0
    with pytest.raises(ParameterError):
        MeasureParams(b=1, m=1, N=100).require_Q()


def test_zn_embedding_rolls():
    f = Measure(4, np.array([1.0, 2.0, 3.0, 4.0]))
    # n = 4 maps to x = 0 in Z_4
    assert f.zn_weights().tolist() == [4.0, 1.0, 2.0, 3.0]
    g = f.as_zn()
    assert g.base == measures.BASE_ZN
    assert g.positions().tolist() == [0, 1, 2, 3]
    assert g.total == f.total


@given(
    weights=st.lists(
        st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=1, max_size=64
    )
)
@settings(max_examples=100, deadline=None)
def test_measure_total_is_fsum(weights):
    f = Measure(len(weights), np.array(weights), signed=True)
    assert f.total == math.fsum(weights)


def test_measure_io_roundtrip(tmp_path, small_table):
    params = MeasureParams(b=1, m=2, N=200)
    lam = measures.lambda_measure(params, small_table)
    csv_path = tmp_path / "m.csv"
    measures.save_measure_csv(lam, csv_path)
    back = measures.load_measure_csv(csv_path)
    assert np.array_equal(back.weights, lam.weights)
    assert back.N == lam.N

    bin_path = tmp_path / "m.bin"
    measures.save_measure_binary(lam, bin_path)
    back2 = measures.load_measure_binary(bin_path)
    assert np.array_equal(back2.weights, lam.weights)
    assert back2.base == lam.base
    assert not back2.signed

    blob = measures.measure_to_bytes(lam)
    assert measures.measure_from_bytes(blob).total == lam.total
    with pytest.raises(ParameterError):
        measures.measure_from_bytes(b"nope" + blob)
