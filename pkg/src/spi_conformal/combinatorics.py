r"""Finite-population order statistics and the rank windows built from them.

Pool ``m + 1`` real scores with ``N`` synthetic scores drawn from the same
continuous distribution. The rank ``R_r`` of the ``r``-th smallest real score
among the synthetic scores (the smallest ``t`` with the ``t``-th synthetic
order statistic above it, ``N + 1`` if none is) then has mass

.. math::

    p_{m,N,r}(k) = \binom{k+r-2}{r-1}\binom{N+m-k-r+2}{m-r+1}
                   \Big/ \binom{N+m+1}{m+1}, \qquad k = 1, \dots, N+1.

Window rank bounds cut ``beta / 2`` of this mass from each tail.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = [
    "OrderStatPmf",
    "WindowTable",
    "log_binomial",
    "order_stat_pmf",
    "order_stat_cdf",
    "window_hit_probability",
    "window_rank_bounds",
    "window_table",
]

# Within these limits math.comb is cheap and log() of the exact integer is
# correctly rounded; beyond them lgamma carries ~1e-11 absolute error.
_EXACT_COMB_N = 1024
_EXACT_COMB_K = 256
_ANCHOR_EVERY = 256
_UNDERFLOW = 1e-300
# Slack used when comparing a CDF value to beta / 2.
TIE_SLACK = 1e-12


def log_binomial(n: int, k: int) -> float:
    """Natural logarithm of the binomial coefficient ``C(n, k)``.

    Raises
    ------
    DomainError
        If ``n`` or ``k`` is negative or ``k > n``.
    """
    n, k = int(n), int(k)
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"log_binomial requires 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if n <= _EXACT_COMB_N or k <= _EXACT_COMB_K:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@dataclass(frozen=True, eq=False)
class OrderStatPmf:
    """Mass of the synthetic rank of the ``r``-th real order statistic.

    ``mass[k - 1]`` holds ``p_{m,N,r}(k)`` for ``k = 1, ..., N + 1``.
    """

    m: int
    N: int
    r: int
    mass: np.ndarray

    def cdf(self, t: int) -> float:
        return order_stat_cdf(self, t)

    @functools.cached_property
    def _cumulative(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.mass)))

    @functools.cached_property
    def _survival(self) -> np.ndarray:
        # survival[t] = sum_{k > t} p(k), accumulated from the right tail so
        # the small masses are added first.
        tail = np.cumsum(self.mass[::-1])[::-1]
        return np.concatenate((tail, [0.0]))


def order_stat_pmf(m: int, N: int, r: int) -> OrderStatPmf:
    """Probability mass function of the synthetic rank of ``S_(r)``.

    The first entry of every block of 256 is anchored in log space with
    :func:`log_binomial`; the remaining entries follow from the exact ratio

    ``p(k+1) / p(k) = (k+r-1)/k * (N-k+1)/(N+m-k-r+2)``

    accumulated as a sum of logarithms. Entries below 1e-300 are stored as 0.
    """
    m, N, r = int(m), int(N), int(r)
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if not 1 <= r <= m + 1:
        raise DomainError(f"r must lie in [1, {m + 1}], got {r}")

    k = np.arange(1, N + 1, dtype=np.float64)
    log_ratio = np.log1p((r - 1) / k) + np.log1p(-(m - r + 1) / (N + m - k - r + 2))
    log_norm = log_binomial(N + m + 1, m + 1)

    log_mass = np.empty(N + 1)
    for start in range(0, N + 1, _ANCHOR_EVERY):
        kk = start + 1
        anchor = (
            log_binomial(kk + r - 2, r - 1)
            + log_binomial(N + m - kk - r + 2, m - r + 1)
            - log_norm
        )
        stop = min(start + _ANCHOR_EVERY, N + 1)
        log_mass[start] = anchor
        if stop - start > 1:
            log_mass[start + 1 : stop] = anchor + np.cumsum(log_ratio[start : stop - 1])

    mass = np.exp(log_mass)
    mass[mass < _UNDERFLOW] = 0.0
    mass.flags.writeable = False
    return OrderStatPmf(m, N, r, mass)


def order_stat_cdf(pmf: OrderStatPmf, t: int) -> float:
    """``F(t) = sum_{k=1}^t p(k)`` for ``0 <= t <= N + 1``."""
    t = int(t)
    if not 0 <= t <= pmf.N + 1:
        raise DomainError(f"t must lie in [0, {pmf.N + 1}], got {t}")
    if t == pmf.N + 1:
        return 1.0
    return float(pmf._cumulative[t])


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    return beta


def _bounds_from_pmf(pmf: OrderStatPmf, beta: float) -> tuple[int, int]:
    half = beta / 2 + TIE_SLACK
    # R- = max{t in [N+1] : F(t-1) <= beta/2}; F(0) = 0 always qualifies.
    lo = int(np.searchsorted(pmf._cumulative[: pmf.N + 1], half, side="right"))
    # R+ = min{t in [N+1] : F(t) >= 1 - beta/2}, i.e. the upper tail beyond t
    # holds at most beta/2; the tail beyond N+1 is empty so t = N+1 qualifies.
    tail = pmf._survival[1:]
    hi = int(np.argmax(tail <= half)) + 1
    return max(lo, 1), hi


def window_rank_bounds(m: int, N: int, r: int, beta: float) -> tuple[int, int]:
    """Rank bounds ``(R_r^-, R_r^+)`` of the window for the ``r``-th score."""
    beta = _check_beta(beta)
    return _bounds_from_pmf(order_stat_pmf(m, N, r), beta)


def window_hit_probability(m: int, N: int, r: int, beta: float) -> float:
    """Exact probability that the ``r``-th real score lands in its window.

    The score lies in ``[S~_(R^-), S~_(R^+)]`` exactly when
    ``R^- < R_r <= R^+``, so the probability is ``F(R^+) - F(R^-)``.
    This is below ``1 - beta`` by up to the atom ``p(R^-)``.
    """
    pmf = order_stat_pmf(m, N, r)
    lo, hi = _bounds_from_pmf(pmf, _check_beta(beta))
    return float(pmf.cdf(hi) - pmf.cdf(lo))


@dataclass(frozen=True, eq=False)
class WindowTable:
    """Window rank bounds for every real rank ``r = 1, ..., m + 1``.

    ``lo[r - 1]`` and ``hi[r - 1]`` hold ``R_r^-`` and ``R_r^+``.
    """

    m: int
    N: int
    beta: float
    lo: np.ndarray
    hi: np.ndarray

    @property
    def rows(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.lo, self.hi)]

    def __len__(self) -> int:
        return self.m + 1

    def to_dict(self) -> dict:
        return {"m": self.m, "N": self.N, "beta": self.beta, "rows": [list(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "WindowTable":
        rows = np.asarray(d["rows"], dtype=np.int64).reshape(-1, 2)
        return cls(int(d["m"]), int(d["N"]), float(d["beta"]), rows[:, 0].copy(), rows[:, 1].copy())


@functools.lru_cache(maxsize=256)
def _window_table_cached(m: int, N: int, beta: float) -> WindowTable:
    lo = np.empty(m + 1, dtype=np.int64)
    hi = np.empty(m + 1, dtype=np.int64)
    for r in range(1, m + 2):
        lo[r - 1], hi[r - 1] = _bounds_from_pmf(order_stat_pmf(m, N, r), beta)
    lo.flags.writeable = False
    hi.flags.writeable = False
    return WindowTable(m, N, beta, lo, hi)


def window_table(m: int, N: int, beta: float) -> WindowTable:
    """Window rank bounds for all ranks; results are cached and immutable."""
    beta = _check_beta(beta)
    if int(m) < 0 or int(N) < 1:
        raise DomainError(f"window_table requires m >= 0 and N >= 1, got m={m}, N={N}")
    return _window_table_cached(int(m), int(N), beta)
