import math
import time

import numpy as np
import pytest

from oracles import direct_worst_case, scan_window
from spi_conformal import (
    DomainError,
    LabeledScoreSet,
    PredictionThreshold,
    TieError,
    conformal_index,
    label_conditional_thresholds,
    order_stat_pmf,
    select_beta,
    spi_member_direct,
    spi_threshold,
    split_conformal_threshold,
    synth_quantile,
    window_table,
    worst_case_bounds,
)


class TestConformalIndex:
    @pytest.mark.parametrize("n,alpha,expected", [(19, 0.05, 19), (18, 0.05, 19), (3, 0.5, 2), (1000, 0.1, 901),
                                                  (999, 0.1, 900), (9, 0.1, 9)])
    def test_values(self, n, alpha, expected):
        assert conformal_index(n, alpha) == expected


class TestSplitConformal:
    def test_nineteen(self):
        scores = np.arange(1.0, 20.0)[::-1]
        assert split_conformal_threshold(scores, 0.05).cutoff == 19.0

    def test_eighteen_is_trivial(self):
        thr = split_conformal_threshold(np.arange(18.0), 0.05)
        assert thr.is_trivial and thr.cutoff == math.inf

    def test_three(self):
        assert split_conformal_threshold([3, 1, 2], 0.5).cutoff == 2.0

    def test_empty(self):
        assert split_conformal_threshold([], 0.3).is_trivial

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_domain(self, alpha):
        with pytest.raises(DomainError):
            split_conformal_threshold([1.0, 2.0], alpha)


class TestSynthQuantile:
    def test_examples(self):
        assert synth_quantile([1, 2, 3], 0.5, 0) == 2
        assert synth_quantile([1, 2, 3], 0.01, 0) == math.inf
        assert synth_quantile([1, 2, 3], 0.5, 1) == 3

    def test_bad_offset(self):
        with pytest.raises(DomainError):
            synth_quantile([1, 2, 3], 0.5, 2)


def _boundary_by_direct(real, synth, alpha, beta):
    """Largest candidate accepted by the transport construction on a dense grid of pooled points."""
    pooled = np.sort(np.concatenate((real, synth)))
    eps = np.min(np.diff(pooled)) / 4
    grid = np.unique(np.concatenate((pooled - eps, pooled + eps, real, [pooled[0] - 1, pooled[-1] + 1])))
    grid = grid[~np.isin(grid, synth)]
    member = spi_member_direct(grid, real, synth, alpha, beta)
    return grid, member


class TestSpiThreshold:
    def test_trivial_when_index_exceeds_N(self):
        rng = np.random.default_rng(0)
        thr = spi_threshold(rng.normal(size=10), rng.normal(size=20), 0.01, 0.4)
        assert thr.is_trivial

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_direct_construction(self, seed):
        rng = np.random.default_rng(seed)
        real, synth = rng.normal(size=15), rng.normal(size=1000)
        cutoff = spi_threshold(real, synth, 0.1, 0.4).cutoff
        grid, member = _boundary_by_direct(real, synth, 0.1, 0.4)
        np.testing.assert_array_equal(member, grid <= cutoff)
        assert np.any(member) and not np.all(member)

    def test_cutoff_is_real_score_or_synthetic_quantile(self):
        rng = np.random.default_rng(7)
        real, synth = rng.normal(1.0, 1.0, 15), rng.normal(size=500)
        cutoff = spi_threshold(real, synth, 0.1, 0.4).cutoff
        assert cutoff in set(real) | set(synth) | {math.inf}

    def test_shift_invariance_of_pattern(self):
        rng = np.random.default_rng(8)
        real, synth = rng.normal(size=12), rng.normal(size=300)
        a = spi_threshold(real, synth, 0.2, 0.3).cutoff
        b = spi_threshold(real + 5.0, synth + 5.0, 0.2, 0.3).cutoff
        assert b - a == pytest.approx(5.0)

    def test_ties_rejected(self):
        with pytest.raises(TieError):
            spi_threshold([1.0, 1.0, 2.0], np.arange(10.0), 0.1, 0.4)

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            spi_threshold([1.0, np.inf], np.arange(10.0), 0.1, 0.4)

    def test_explicit_table_checked(self):
        from spi_conformal import ConfigurationError
        with pytest.raises(ConfigurationError):
            spi_threshold([1.0, 2.0], np.arange(10.0), 0.1, 0.4, table=window_table(3, 10, 0.4))


class TestMemberDirect:
    def test_low_candidate_accepted(self):
        rng = np.random.default_rng(1)
        real, synth = rng.normal(size=10), rng.normal(size=200)
        assert spi_member_direct(-100.0, real, synth, 0.1, 0.4) is True

    def test_high_candidate_rejected(self):
        rng = np.random.default_rng(1)
        real, synth = rng.normal(size=10), rng.normal(size=200)
        assert spi_member_direct(100.0, real, synth, 0.1, 0.4) is False


class TestWorstCaseBounds:
    @pytest.mark.parametrize("m,N,alpha,beta,expected", [
        (15, 1000, 0.05, 0.4, (0.9375, 1.0)),
        (15, 1000, 0.02, 0.4, (0.9375, 1.0)),
        (15, 1000, 0.1, 0.4, (0.8125, 0.9375)),
        (5, 1000, 0.02, 0.4, (1.0, 1.0)),
        (10, 1000, 0.02, 0.4, (1.0, 1.0)),
    ])
    def test_reported_values(self, m, N, alpha, beta, expected):
        b = worst_case_bounds(m, N, alpha, beta)
        assert (b.lower, b.upper) == expected

    @pytest.mark.parametrize("m,N,alpha,beta", [(15, 1000, 0.1, 0.4), (7, 250, 0.2, 0.15), (30, 90, 0.05, 0.6)])
    def test_against_scanned_windows(self, m, N, alpha, beta):
        lo, hi = zip(*(scan_window(list(order_stat_pmf(m, N, r).mass), beta) for r in range(1, m + 2)))
        b = worst_case_bounds(m, N, alpha, beta)
        assert (b.lower, b.upper) == direct_worst_case(m, N, alpha, beta, lo, hi)

    def test_step_structure(self):
        for m in (3, 9, 15, 40):
            b = worst_case_bounds(m, 1000, 0.1, 0.4)
            assert (b.lower * (m + 1)) == pytest.approx(round(b.lower * (m + 1)))
            assert (b.upper * (m + 1)) == pytest.approx(round(b.upper * (m + 1)))
            assert b.lower <= b.upper

    def test_fast(self):
        from spi_conformal.combinatorics import _window_table_cached
        _window_table_cached.cache_clear()
        t0 = time.perf_counter()
        worst_case_bounds(15, 1000, 0.05, 0.4)
        assert time.perf_counter() - t0 < 0.01


class TestSelectBeta:
    def test_sweep_oracle(self):
        beta = select_beta(15, 1000, 0.1, 0.8125, 0.01)
        grid = [round(i * 0.01, 12) for i in range(1, 100)]
        expected = next(b for b in grid if worst_case_bounds(15, 1000, 0.1, b).lower >= 0.8125)
        assert beta == expected and beta <= 0.4
        assert worst_case_bounds(15, 1000, 0.1, beta).lower == 0.8125

    def test_target_zero(self):
        assert select_beta(15, 1000, 0.1, 0.0, 0.01) == 0.01

    def test_unity(self):
        beta = select_beta(5, 1000, 0.02, 1.0, 0.01)
        b = worst_case_bounds(5, 1000, 0.02, beta)
        assert (b.lower, b.upper) == (1.0, 1.0)

    def test_no_solution(self):
        assert select_beta(5, 1000, 0.3, 0.99, 0.01) is None

    @pytest.mark.parametrize("kw", [{"step": 0.0}, {"target_lower": 1.5}])
    def test_domain(self, kw):
        args = {"m": 5, "N": 100, "alpha": 0.1, "target_lower": 0.5, "step": 0.01} | kw
        with pytest.raises(DomainError):
            select_beta(**args)


class TestPredictionThreshold:
    def test_roundtrip_infinite(self):
        for c in (math.inf, -math.inf, 0.25):
            t = PredictionThreshold(c)
            assert PredictionThreshold.from_dict(t.to_dict()) == t
        assert PredictionThreshold(math.inf).to_dict() == {"cutoff": "+inf"}

    def test_contains(self):
        assert list(PredictionThreshold(1.0).contains([0.5, 1.0, 1.5])) == [True, True, False]


class TestLabelConditional:
    def _sets(self):
        rng = np.random.default_rng(3)
        real = LabeledScoreSet.from_pairs([("a", x) for x in rng.normal(size=12)] +
                                          [("b", x) for x in rng.normal(size=6)])
        synth = LabeledScoreSet.from_pairs([("a", x) for x in rng.normal(size=400)])
        return real, synth

    def test_absent_label_uses_whole_synthetic_set(self):
        real, synth = self._sets()
        res = label_conditional_thresholds(real, synth, 0.1, 0.4)
        assert res["b"].fallback and res["b"].N == 400
        assert "fallback: whole synthetic set" in res["b"].flags
        assert not res["a"].fallback and res["a"].m == 12
        expected = spi_threshold(real.scores_for("b"), synth.scores, 0.1, 0.4)
        assert res["b"].threshold == expected

    def test_label_without_real_scores(self):
        real, synth = self._sets()
        res = label_conditional_thresholds(real, synth, 0.1, 0.4, universe=("a", "b", "c"))
        assert res["c"].m == 0 and "no real scores" in res["c"].flags
        assert res["c"].bounds.m == 0

    def test_trivial_flag(self):
        real = LabeledScoreSet.from_pairs([("a", 0.1), ("a", 0.5)])
        synth = LabeledScoreSet.from_pairs([("a", 0.2), ("a", 0.3)])
        res = label_conditional_thresholds(real, synth, 0.1, 0.4)
        assert res["a"].threshold.is_trivial
        assert "trivial: too few synthetic scores" in res["a"].flags

    def test_unknown_label(self):
        with pytest.raises(DomainError):
            LabeledScoreSet.from_pairs([("z", 1.0)], universe=("a",))
