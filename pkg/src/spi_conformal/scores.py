"""Nonconformity scores, tie-breaking jitter and the affine synthetic-score adjustment."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import PredictionThreshold
from .exceptions import DegenerateFitError, DomainError
from .transporter import ScoreVector, as_scores

__all__ = [
    "AffineAdjustment",
    "QuantilePair",
    "affine_adjust_fit",
    "aps_score",
    "cqr_interval",
    "cqr_score",
    "jitter",
]


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("probability vector must be one-dimensional and nonempty")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("probabilities must be nonnegative and sum to 1")
    return p


def aps_score(probs, label_index: int, u: float) -> float:
    """Adaptive prediction sets score of one label.

    Mass of every class ranked at or above the label (descending probability,
    ties broken by ascending class index) minus ``u`` times the label's own
    probability.
    """
    p = _check_probs(probs)
    if not 0 <= label_index < p.size:
        raise DomainError(f"label_index must lie in [0, {p.size}), got {label_index}")
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [0, 1], got {u}")
    order = np.argsort(-p, kind="stable")
    rank = int(np.flatnonzero(order == label_index)[0])
    cum = math.fsum(p[order[: rank + 1]])
    return min(max(cum - u * p[label_index], 0.0), 1.0)


@dataclass(frozen=True)
class QuantilePair:
    """Lower and upper conditional quantile estimates at one input."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise DomainError(f"quantile pair requires lo <= hi, got ({self.lo}, {self.hi})")


def cqr_score(q: QuantilePair, y):
    """Signed distance of ``y`` outside the band: ``max(lo - y, y - hi)``."""
    out = np.maximum(q.lo - np.asarray(y, dtype=np.float64), np.asarray(y, dtype=np.float64) - q.hi)
    return float(out) if out.ndim == 0 else out


def cqr_interval(q: QuantilePair, threshold) -> tuple[float, float]:
    """Interval ``[lo - cutoff, hi + cutoff]`` of outcomes whose score is at most the cutoff.

    A ``-inf`` cutoff gives the empty interval ``(nan, nan)``; a cutoff below
    ``-(hi - lo) / 2`` is empty as well and reported the same way.
    """
    t = threshold.cutoff if isinstance(threshold, PredictionThreshold) else float(threshold)
    if t == math.inf:
        return (-math.inf, math.inf)
    lo, hi = q.lo - t, q.hi + t
    if t == -math.inf or lo > hi:
        return (math.nan, math.nan)
    return (lo, hi)


def jitter(scores, delta: float | None = None, seed=None) -> ScoreVector:
    """Add i.i.d. Uniform[-delta, delta] noise so tied scores become distinct.

    ``delta`` defaults to ``1e-9`` times the score range (``1e-9`` times the
    largest magnitude, or ``1e-9``, when all scores are equal). ``seed`` is
    anything :func:`numpy.random.default_rng` accepts, including a Generator.
    """
    x = np.asarray(as_scores(scores).values)
    if delta is None:
        span = float(x.max() - x.min()) if x.size else 0.0
        if span <= 0:
            span = max(float(np.abs(x).max()) if x.size else 0.0, 1.0)
        delta = 1e-9 * span
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    rng = np.random.default_rng(seed)
    return ScoreVector(x + rng.uniform(-delta, delta, size=x.size))


@dataclass(frozen=True)
class AffineAdjustment:
    """Map ``s -> scale * s + shift`` applied to synthetic scores."""

    scale: float
    shift: float

    def __call__(self, scores):
        return self.scale * np.asarray(scores, dtype=np.float64) + self.shift

    def apply(self, synth) -> ScoreVector:
        return ScoreVector(self(as_scores(synth).values))


def affine_adjust_fit(real, synth) -> AffineAdjustment:
    """Least-squares fit of real order statistics on matched synthetic ones.

    Regresses ``S_(i)`` on ``S~_(floor(i N / m))`` for ``i = 1, ..., m``. A
    non-positive slope reverses the score order and triggers a warning.
    """
    real = as_scores(real)
    synth = as_scores(synth)
    m, N = len(real), len(synth)
    if m < 2:
        raise DomainError(f"affine fit needs at least 2 real scores, got {m}")
    if N < m:
        raise DomainError(f"affine fit needs N >= m, got N={N}, m={m}")
    i = np.arange(1, m + 1)
    x = synth.sorted[(i * N) // m - 1]
    y = real.sorted
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 0.0:
        raise DegenerateFitError("matched synthetic order statistics have zero variance")
    scale = float(xc @ (y - y.mean())) / sxx
    shift = float(y.mean() - scale * x.mean())
    if scale <= 0:
        warnings.warn(f"affine adjustment has non-positive scale {scale:.6g}", RuntimeWarning, stacklevel=2)
    return AffineAdjustment(scale, shift)
