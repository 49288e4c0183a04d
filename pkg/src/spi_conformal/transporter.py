"""Score vectors, rank windows in synthetic-score space, and the transport map.

The transport map sends a real-domain score ``eta`` to a synthetic score
inside the window of its rank among the real calibration scores: the window
upper end when ``eta`` is at or above it, the window lower end when ``eta`` is
below it, and otherwise the largest in-window synthetic score not exceeding
``eta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .combinatorics import WindowTable
from .exceptions import ConfigurationError, DomainError, TieError

__all__ = [
    "ScoreVector",
    "ScoreWindow",
    "as_scores",
    "rank_among",
    "score_window",
    "transport",
]


class ScoreVector:
    """Finite multiset of real scores with sorted access.

    Order statistics are 1-indexed; index ``len + 1`` is the ``+inf``
    sentinel and index 0 is ``-inf``.
    """

    __slots__ = ("values", "sorted", "_padded")

    def __init__(self, values):
        try:
            arr = np.array(values, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"scores must be real numbers: {exc}") from None
        if arr.ndim > 1:
            raise DomainError(f"scores must be one-dimensional, got shape {arr.shape}")
        arr = arr.reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise DomainError("scores must be finite")
        arr.flags.writeable = False
        srt = np.sort(arr)
        srt.flags.writeable = False
        self.values = arr
        self.sorted = srt
        padded = np.concatenate(([-np.inf], srt, [np.inf]))
        padded.flags.writeable = False
        self._padded = padded

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self) -> str:
        return f"ScoreVector(n={len(self)})"

    def order_stat(self, j):
        """``j``-th smallest score; 0 gives ``-inf`` and ``len + 1`` gives ``+inf``."""
        j = np.asarray(j)
        if np.any((j < 0) | (j > len(self) + 1)):
            raise DomainError(f"order statistic index out of range [0, {len(self) + 1}]")
        out = self._padded[j]
        return float(out) if out.ndim == 0 else out

    @property
    def is_distinct(self) -> bool:
        return bool(np.all(np.diff(self.sorted) > 0))

    def require_distinct(self, what: str = "scores") -> "ScoreVector":
        if not self.is_distinct:
            raise TieError(
                f"{what} contain ties; the score distribution must be continuous. "
                "Add negligible Uniform[-delta, delta] noise with scores.jitter()."
            )
        return self


def as_scores(x) -> ScoreVector:
    return x if isinstance(x, ScoreVector) else ScoreVector(x)


@dataclass(frozen=True)
class ScoreWindow:
    """Synthetic-score interval ``[lower, upper]`` for one real rank."""

    lower: float
    upper: float
    lo_rank: int
    hi_rank: int

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def _check_table(table: WindowTable, real: ScoreVector | None, synth: ScoreVector) -> None:
    if table.N != len(synth):
        raise ConfigurationError(
            f"window table built for N={table.N} but {len(synth)} synthetic scores were given"
        )
    if real is not None and table.m != len(real):
        raise ConfigurationError(
            f"window table built for m={table.m} but {len(real)} real scores were given"
        )


def rank_among(eta, real_scores):
    """Rank of ``eta`` among the real scores plus itself: ``1 + #{S_i < eta}``."""
    real_scores = as_scores(real_scores)
    r = np.searchsorted(real_scores.sorted, eta, side="left") + 1
    return int(r) if np.ndim(r) == 0 else r


def score_window(r: int, table: WindowTable, synth) -> ScoreWindow:
    """Window ``[S~_(R_r^-), S~_(R_r^+)]`` with ``S~_(N+1) = +inf``."""
    synth = as_scores(synth)
    _check_table(table, None, synth)
    if not 1 <= r <= table.m + 1:
        raise DomainError(f"rank must lie in [1, {table.m + 1}], got {r}")
    lo, hi = int(table.lo[r - 1]), int(table.hi[r - 1])
    return ScoreWindow(synth.order_stat(lo), synth.order_stat(hi), lo, hi)


def transport(eta, real_scores, synth, table: WindowTable):
    """Map real-domain score(s) ``eta`` into synthetic-score space.

    Accepts a scalar or an array of candidate scores. Each result lies in the
    window of the candidate's rank among ``real_scores``.
    """
    real_scores = as_scores(real_scores)
    synth = as_scores(synth)
    _check_table(table, real_scores, synth)

    eta_arr = np.asarray(eta, dtype=np.float64)
    r = np.searchsorted(real_scores.sorted, eta_arr, side="left") + 1
    lo = table.lo[r - 1]
    hi = table.hi[r - 1]
    lower = synth._padded[lo]
    upper = synth._padded[hi]

    # Largest j with S~_(j) <= eta, clipped to the window top; when
    # lower <= eta this index is at least lo, so the candidate set is nonempty.
    below = np.searchsorted(synth.sorted, eta_arr, side="right")
    nearest = synth._padded[np.minimum(below, hi)]

    out = np.where(eta_arr >= upper, upper, np.where(eta_arr < lower, lower, nearest))
    return float(out) if out.ndim == 0 else out
