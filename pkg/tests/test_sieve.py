import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primeaps.errors import ConfigError, ParameterError, PreconditionError, TableRangeError
from primeaps import sieve


def _trial_factorize(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def _simple_primes(limit):
    mark = np.ones(limit + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mark[p]:
            mark[p * p :: p] = False
    return np.flatnonzero(mark)


def test_build_table_range_errors():
    with pytest.raises(ConfigError):
        sieve.build_factor_table(1)
    with pytest.raises(ConfigError):
        sieve.build_factor_table(2 * 10**8)


def test_spf_matches_trial_division(small_table):
    rng = np.random.default_rng(0)
    for n in rng.integers(2, 20_000, size=300).tolist():
        expect = _trial_factorize(n)[0][0]
        assert small_table.smallest_prime_factor(n) == expect


def test_is_prime_matches_oracle(small_table):
    oracle = set(_simple_primes(20_000).tolist())
    ns = np.arange(2, 20_001)
    got = small_table.is_prime(ns)
    expect = np.array([int(n) in oracle for n in ns])
    assert np.array_equal(got, expect)


def test_primes_up_to(small_table):
    assert np.array_equal(small_table.primes_up_to(30), _simple_primes(30))
    assert small_table.primes_up_to(1).size == 0


def test_check_range(small_table):
    small_table.check_range(20_000)
    with pytest.raises(TableRangeError):
        small_table.check_range(20_001)


@given(n=st.integers(min_value=2, max_value=20_000))
@settings(max_examples=200, deadline=None)
def test_factorize_reconstructs(small_table, n):
    prod = 1
    last_p = 1
    for p, e in small_table.factorize(n):
        assert small_table.is_prime(p)
        assert p > last_p
        last_p = p
        prod *= p**e
    assert prod == n


def test_mobius_matches_oracle(small_table):
    for n in range(1, 500):
        fac = _trial_factorize(n)
        if any(e > 1 for _, e in fac):
            expect = 0
        else:
            expect = (-1) ** len(fac)
        assert sieve.mobius(n, small_table) == expect


def test_euler_phi_matches_oracle(small_table):
    for n in range(1, 300):
        expect = sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)
        assert sieve.euler_phi(n, small_table) == expect


def test_rough_smooth_brute(small_table):
    for n in range(1, 200):
        for q in (1, 2, 3, 7, 50):
            fac = [p for p, _ in _trial_factorize(n)]
            rough = all(p > q for p in fac)
            smooth = q >= 2 and all(p <= q for p in fac)
            assert sieve.is_rough(n, q, small_table) == rough
            assert sieve.is_smooth(n, q, small_table) == smooth


def test_no_one_smooth_numbers(small_table):
    # Q < 2 admits no smooth numbers, not even 1
    assert not sieve.is_smooth(1, 1, small_table)
    assert not sieve.is_smooth(6, 1, small_table)
    assert sieve.is_rough(1, 50, small_table)


def test_mertens_product_direct(small_table):
    for q, m in [(10, 1), (30, 6), (2, 1), (97, 10)]:
        expect = 1.0
        for p in _simple_primes(q).tolist():
            if m % p != 0:
                expect *= 1.0 - 1.0 / p
        assert sieve.mertens_product(q, m, small_table) == pytest.approx(expect, rel=1e-14)


def test_mertens_product_validation(small_table):
    with pytest.raises(ParameterError):
        sieve.mertens_product(0, 1, small_table)
    with pytest.raises(TableRangeError):
        sieve.mertens_product(30_000, 1, small_table)


def test_ramanujan_mobius(small_table):
    rng = np.random.default_rng(1)
    for q in range(1, 400):
        a = int(rng.integers(0, q)) if q > 1 else 0
        while math.gcd(a, q) != 1:
            a = int(rng.integers(0, q))
        got = sieve.ramanujan_sum(q, a)
        assert abs(got - sieve.mobius(q, small_table)) < 1e-9


def test_ramanujan_general_formula(small_table):
    # c_q(a) = mu(q/g) phi(q) / phi(q/g), g = gcd(a, q)
    for q in (12, 30, 36, 49, 100):
        for a in range(q):
            g = math.gcd(a, q) if a else q
            expect = (
                sieve.mobius(q // g, small_table)
                * sieve.euler_phi(q, small_table)
                / sieve.euler_phi(q // g, small_table)
            )
            assert abs(sieve.ramanujan_sum(q, a) - expect) < 1e-9


def test_ramanujan_at_zero(small_table):
    for q in (1, 2, 7, 12):
        assert abs(sieve.ramanujan_sum(q, 0) - sieve.euler_phi(q, small_table)) < 1e-9


def test_check_residue_pair():
    sieve.check_residue_pair(1, 1)
    sieve.check_residue_pair(0, 1)
    sieve.check_residue_pair(5, 2)
    with pytest.raises(PreconditionError):
        sieve.check_residue_pair(2, 4)
    with pytest.raises(PreconditionError):
        sieve.check_residue_pair(-1, 3)
    with pytest.raises(PreconditionError):
        sieve.check_residue_pair(1, 0)


def test_warn_if_large_modulus():
    with pytest.warns(UserWarning):
        assert not sieve.warn_if_large_modulus(30, 1000)
    assert sieve.warn_if_large_modulus(6, 1000)


def test_prime_shifted_support_brute(small_table):
    oracle = set(_simple_primes(20_000).tolist())
    sup = sieve.prime_shifted_support(1, 2, 500, small_table)
    expect = [n for n in range(1, 501) if 2 * n + 1 in oracle]
    assert sup.members.tolist() == expect
    assert sup.kind == "prime-shifted"
    assert len(sup) == len(expect)


def test_prime_shifted_support_range(small_table):
    with pytest.raises(TableRangeError):
        sieve.prime_shifted_support(1, 2, 15_000, small_table)


@pytest.mark.filterwarnings("ignore::primeaps.errors.DeskScaleWarning")
def test_rough_support_brute(small_table):
    for b, m, q in [(1, 2, 7), (2, 3, 5), (0, 1, 11), (1, 6, 4), (1, 1, 1)]:
        sup = sieve.rough_support(b, m, 300, q, small_table)
        expect = []
        for n in range(1, 301):
            v = m * n + b
            fac = [p for p, _ in _trial_factorize(v)] if v > 1 else []
            if all(p > q for p in fac):
                expect.append(n)
        assert sup.members.tolist() == expect, (b, m, q)
        assert sup.kind == "q-rough"
