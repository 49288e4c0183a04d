import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import gammaln

from oracles import enumerated_rank_pmf, exact_pmf_fraction, placement_rank_pmf, scan_window
from spi_conformal import (
    DomainError,
    WindowTable,
    log_binomial,
    order_stat_cdf,
    order_stat_pmf,
    window_hit_probability,
    window_rank_bounds,
    window_table,
)


class TestLogBinomial:
    def test_small_exact(self):
        assert log_binomial(5, 2) == pytest.approx(math.log(10), abs=1e-15)

    @pytest.mark.parametrize("n", [0, 1, 7, 5000])
    def test_k_zero(self, n):
        assert log_binomial(n, 0) == 0.0
        assert log_binomial(n, n) == 0.0

    def test_large_matches_log_gamma(self):
        n, k = 31016, 15001
        ref = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        assert log_binomial(n, k) == pytest.approx(ref, abs=1e-9)

    def test_large_matches_exact_integer(self):
        n, k = 4000, 1999
        assert log_binomial(n, k) == pytest.approx(math.log(math.comb(n, k)), rel=1e-13)

    @pytest.mark.parametrize("n,k", [(3, 4), (-1, 0), (3, -1)])
    def test_domain(self, n, k):
        with pytest.raises(DomainError):
            log_binomial(n, k)


class TestOrderStatPmf:
    def test_uniform_single_score(self):
        np.testing.assert_allclose(order_stat_pmf(0, 4, 1).mass, [0.2] * 5, atol=1e-15)

    @pytest.mark.parametrize("r,expected", [(1, [2 / 3, 1 / 3]), (2, [1 / 3, 2 / 3])])
    def test_two_real_one_synthetic(self, r, expected):
        np.testing.assert_allclose(order_stat_pmf(1, 1, r).mass, expected, atol=1e-15)

    @pytest.mark.parametrize("m", range(0, 5))
    @pytest.mark.parametrize("N", range(1, 6))
    def test_matches_enumeration(self, m, N):
        oracle = enumerated_rank_pmf(m, N)
        for r in range(1, m + 2):
            got = [Fraction(x).limit_denominator(10**7) for x in order_stat_pmf(m, N, r).mass]
            assert got == list(oracle[r - 1])

    @pytest.mark.parametrize("m,N,r", [(2, 3, 1), (3, 4, 3), (4, 2, 5)])
    def test_placement_oracle_agrees(self, m, N, r):
        assert placement_rank_pmf(m, N, r) == list(enumerated_rank_pmf(m, N)[r - 1])

    @pytest.mark.parametrize("m,N,r", [(15, 1000, 1), (15, 1000, 8), (15, 1000, 16), (40, 300, 17)])
    def test_matches_exact_rationals(self, m, N, r):
        exact = np.array([float(x) for x in exact_pmf_fraction(m, N, r)])
        np.testing.assert_allclose(order_stat_pmf(m, N, r).mass, exact, rtol=1e-11, atol=1e-300)

    def test_large_population_sums_to_one(self):
        pmf = order_stat_pmf(30, 30000, 12)
        assert abs(math.fsum(pmf.mass) - 1.0) < 1e-12
        assert np.all(pmf.mass >= 0)

    @pytest.mark.parametrize("r", [0, 3])
    def test_rank_domain(self, r):
        with pytest.raises(DomainError):
            order_stat_pmf(1, 5, r)


class TestOrderStatCdf:
    def test_endpoints(self):
        pmf = order_stat_pmf(6, 40, 3)
        assert order_stat_cdf(pmf, 0) == 0.0
        assert order_stat_cdf(pmf, 41) == 1.0

    def test_two_thirds(self):
        assert order_stat_cdf(order_stat_pmf(1, 1, 1), 1) == pytest.approx(2 / 3, abs=1e-15)

    def test_monotone(self):
        pmf = order_stat_pmf(9, 77, 4)
        vals = [order_stat_cdf(pmf, t) for t in range(78)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("t", [-1, 3])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            order_stat_cdf(order_stat_pmf(1, 1, 1), t)


class TestWindowRankBounds:
    def test_hand_case(self):
        assert window_rank_bounds(1, 1, 1, 0.5) == (1, 2)

    def test_tiny_beta_gives_full_window(self):
        assert window_rank_bounds(3, 20, 2, 1e-12) == (1, 21)

    @pytest.mark.parametrize("r", [1, 8, 16])
    def test_scan_oracle(self, r):
        mass = list(order_stat_pmf(15, 1000, r).mass)
        assert window_rank_bounds(15, 1000, r, 0.4) == scan_window(mass, 0.4)

    @pytest.mark.parametrize("m", range(0, 5))
    @pytest.mark.parametrize("N", [1, 3, 6])
    @pytest.mark.parametrize("beta", [0.1, 0.4, 0.5, 0.9])
    def test_scan_oracle_small(self, m, N, beta):
        for r in range(1, m + 2):
            exact = [float(x) for x in enumerated_rank_pmf(m, N)[r - 1]]
            assert window_rank_bounds(m, N, r, beta) == scan_window(exact, beta)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.5])
    def test_beta_domain(self, beta):
        with pytest.raises(DomainError):
            window_rank_bounds(2, 10, 1, beta)

    def test_tail_masses(self):
        m, N, beta = 12, 500, 0.3
        for r in range(1, m + 2):
            pmf = order_stat_pmf(m, N, r)
            lo, hi = window_rank_bounds(m, N, r, beta)
            assert pmf.cdf(lo - 1) <= beta / 2 + 1e-12
            assert 1 - pmf.cdf(hi) <= beta / 2 + 1e-12
            # maximality and minimality
            assert lo == N + 1 or pmf.cdf(lo) > beta / 2 - 1e-12
            assert hi == 1 or 1 - pmf.cdf(hi - 1) > beta / 2 - 1e-12


class TestWindowTable:
    def test_rows(self):
        assert window_table(1, 1, 0.5).rows == [(1, 2), (1, 2)]
        assert window_table(0, 4, 0.5).rows == [(2, 4)]

    def test_roundtrip(self):
        t = window_table(5, 60, 0.25)
        back = WindowTable.from_dict(t.to_dict())
        assert back.rows == t.rows and back.N == 60

    def test_monotone_in_rank(self):
        t = window_table(20, 800, 0.4)
        assert np.all(np.diff(t.lo) >= 0) and np.all(np.diff(t.hi) >= 0)
        assert np.all(t.lo <= t.hi)

    def test_read_only(self):
        t = window_table(3, 10, 0.4)
        with pytest.raises(ValueError):
            t.lo[0] = 5


class TestWindowHitProbability:
    def test_equals_cdf_difference(self):
        pmf = order_stat_pmf(15, 200, 3)
        lo, hi = window_rank_bounds(15, 200, 3, 0.4)
        assert window_hit_probability(15, 200, 3, 0.4) == pytest.approx(pmf.cdf(hi) - pmf.cdf(lo))

    def test_zero_width_window(self):
        lo, hi = window_rank_bounds(15, 200, 1, 0.99)
        assert lo == hi
        assert window_hit_probability(15, 200, 1, 0.99) == 0.0


class TestWindowNesting:
    @pytest.mark.parametrize("m,N", [(15, 1000), (4, 30), (30, 200)])
    def test_larger_beta_gives_nested_window(self, m, N):
        betas = [0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.99]
        tables = [window_table(m, N, b) for b in betas]
        for wide, narrow in zip(tables, tables[1:]):
            assert np.all(wide.lo <= narrow.lo) and np.all(narrow.hi <= wide.hi)
