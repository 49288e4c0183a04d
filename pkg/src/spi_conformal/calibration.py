"""Prediction-set thresholds and their distribution-free coverage bounds.

Every method here reduces to a single cutoff: a candidate label ``y`` enters
the prediction set iff its score ``s(x, y)`` is at most the cutoff.
"""

from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .combinatorics import WindowTable, window_table
from .exceptions import DomainError
from .transporter import ScoreVector, _check_table, as_scores, transport

__all__ = [
    "CoverageBounds",
    "LabelThreshold",
    "LabeledScoreSet",
    "PredictionThreshold",
    "conformal_index",
    "label_conditional_thresholds",
    "select_beta",
    "spi_member_direct",
    "spi_threshold",
    "split_conformal_threshold",
    "synth_quantile",
    "worst_case_bounds",
]


def _encode(x: float):
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return float(x)


def _decode(x) -> float:
    if isinstance(x, str):
        return {"+inf": math.inf, "inf": math.inf, "-inf": -math.inf}[x]
    return float(x)


@dataclass(frozen=True)
class PredictionThreshold:
    """Cutoff on the score; ``+inf`` is the trivial full set, ``-inf`` the empty set."""

    cutoff: float

    @property
    def is_trivial(self) -> bool:
        return self.cutoff == math.inf

    @property
    def is_empty(self) -> bool:
        return self.cutoff == -math.inf

    def contains(self, score):
        """Whether candidate score(s) fall inside the prediction set."""
        return np.asarray(score) <= self.cutoff

    def to_dict(self) -> dict:
        return {"cutoff": _encode(self.cutoff)}

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionThreshold":
        return cls(_decode(d["cutoff"]))


@dataclass(frozen=True)
class CoverageBounds:
    """Worst-case coverage interval; both ends are multiples of ``1 / (m + 1)``."""

    lower: float
    upper: float
    m: int
    N: int
    alpha: float
    beta: float

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "m": self.m,
            "N": self.N,
            "alpha": self.alpha,
            "beta": self.beta,
        }


def _check_level(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")
    return value


def conformal_index(n: int, alpha: float) -> int:
    """``ceil((1 - alpha)(n + 1))``.

    ``alpha`` is read as the decimal it prints as, so 0.05 with ``n = 19``
    gives exactly 19 rather than a float-rounding artifact.
    """
    a = Fraction(repr(float(alpha)))
    return math.ceil((1 - a) * (n + 1))


def split_conformal_threshold(scores, alpha: float) -> PredictionThreshold:
    """Split conformal cutoff: the ``ceil((1-alpha)(m+1))``-th smallest score.

    Returns the trivial ``+inf`` cutoff when that index exceeds ``m``.
    """
    alpha = _check_level("alpha", alpha)
    scores = as_scores(scores)
    return PredictionThreshold(scores.order_stat(min(conformal_index(len(scores), alpha), len(scores) + 1)))


def synth_quantile(synth, alpha: float, offset: int = 0) -> float:
    """The ``(ceil((1-alpha)(N+1)) + offset)``-th smallest synthetic score, or ``+inf``."""
    alpha = _check_level("alpha", alpha)
    if offset not in (0, 1):
        raise DomainError(f"offset must be 0 or 1, got {offset}")
    synth = as_scores(synth)
    idx = conformal_index(len(synth), alpha) + offset
    return math.inf if idx > len(synth) else synth.order_stat(idx)


def _max_rank_within(ranks: np.ndarray, limit: int) -> int:
    """``max{r : ranks[r-1] <= limit}``, 0 when no rank qualifies."""
    ok = np.flatnonzero(ranks <= limit)
    return int(ok[-1]) + 1 if ok.size else 0


def spi_threshold(
    real,
    synth,
    alpha: float,
    beta: float,
    table: WindowTable | None = None,
) -> PredictionThreshold:
    """Synthetic-powered cutoff computed in closed form.

    ``max(min(Q', S_(R~-)), S_(R~+))`` where ``Q'`` is the synthetic score one
    past the conformal index and ``R~+-`` are the largest real ranks whose
    window bound sits at or below the conformal index. ``S_(0) = -inf`` and
    ``S_(m+1) = +inf``.

    Parameters
    ----------
    real, synth : array-like or ScoreVector
        Real calibration scores (``m`` of them) and synthetic scores (``N``).
        Each set must be free of ties.
    alpha : float
        Target miscoverage level.
    beta : float
        Window miss budget; larger values give narrower windows.
    table : WindowTable, optional
        Precomputed ``window_table(m, N, beta)``; built when omitted.
    """
    alpha = _check_level("alpha", alpha)
    beta = _check_level("beta", beta)
    real = as_scores(real).require_distinct("real scores")
    synth = as_scores(synth).require_distinct("synthetic scores")
    if table is None:
        table = window_table(len(real), len(synth), beta)
    _check_table(table, real, synth)
    return _spi_cutoff(real, synth, alpha, table)


def _spi_cutoff(real: ScoreVector, synth: ScoreVector, alpha: float, table: WindowTable,
                index: int | None = None) -> PredictionThreshold:
    N = len(synth)
    c = conformal_index(N, alpha) if index is None else index
    q_next = math.inf if c + 1 > N else synth.order_stat(c + 1)
    r_minus = _max_rank_within(table.lo, c)
    r_plus = _max_rank_within(table.hi, c)
    cutoff = max(min(q_next, real.order_stat(r_minus)), real.order_stat(r_plus))
    return PredictionThreshold(float(cutoff))


def spi_member_direct(candidate, real, synth, alpha: float, beta: float,
                      table: WindowTable | None = None):
    """Membership by transporting the candidate score and comparing to the synthetic quantile.

    Slow reference path for :func:`spi_threshold`; vectorized over ``candidate``.
    """
    alpha = _check_level("alpha", alpha)
    beta = _check_level("beta", beta)
    real = as_scores(real)
    synth = as_scores(synth)
    if table is None:
        table = window_table(len(real), len(synth), beta)
    q = synth_quantile(synth, alpha, 0)
    out = np.asarray(transport(candidate, real, synth, table)) <= q
    return bool(out) if out.ndim == 0 else out


def worst_case_bounds(m: int, N: int, alpha: float, beta: float) -> CoverageBounds:
    """Coverage bounds that hold for any synthetic score distribution.

    The lower (upper) bound is the fraction of ranks ``j`` in ``[m+1]`` whose
    window top (bottom) rank is at most ``ceil((1-alpha)(N+1))``.
    """
    alpha = _check_level("alpha", alpha)
    table = window_table(m, N, beta)
    c = conformal_index(N, alpha)
    return CoverageBounds(
        lower=int(np.count_nonzero(table.hi <= c)) / (m + 1),
        upper=int(np.count_nonzero(table.lo <= c)) / (m + 1),
        m=int(m),
        N=int(N),
        alpha=alpha,
        beta=table.beta,
    )


def select_beta(m: int, N: int, alpha: float, target_lower: float, step: float = 0.01) -> float | None:
    """Smallest grid ``beta`` in ``{step, 2 step, ...}`` whose worst-case lower bound reaches the target.

    Returns ``None`` when no grid value below 1 qualifies.
    """
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")
    if not 0.0 <= target_lower <= 1.0:
        raise DomainError(f"target_lower must lie in [0, 1], got {target_lower}")
    i = 1
    while True:
        beta = round(i * step, 12)
        if beta >= 1.0:
            return None
        if worst_case_bounds(m, N, alpha, beta).lower >= target_lower:
            return beta
        i += 1


@dataclass(frozen=True, eq=False)
class LabeledScoreSet:
    """Scores tagged with discrete labels, optionally over a declared universe."""

    labels: np.ndarray
    scores: np.ndarray
    universe: tuple = ()

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=object).reshape(-1)
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if labels.shape != scores.shape:
            raise DomainError("labels and scores must have equal length")
        if not np.all(np.isfinite(scores)):
            raise DomainError("scores must be finite")
        universe = tuple(self.universe) or tuple(dict.fromkeys(labels.tolist()))
        unknown = set(labels.tolist()) - set(universe)
        if unknown:
            raise DomainError(f"labels outside the declared universe: {sorted(map(str, unknown))}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "universe", universe)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, float]], universe: Sequence = ()) -> "LabeledScoreSet":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=object), [p[1] for p in pairs], tuple(universe))

    def __len__(self) -> int:
        return self.scores.size

    def scores_for(self, label) -> np.ndarray:
        return self.scores[self.labels == label]

    def present(self) -> set:
        return set(self.labels.tolist())


@dataclass(frozen=True)
class LabelThreshold:
    """Per-label cutoff plus the sample sizes and flags that produced it."""

    label: Hashable
    threshold: PredictionThreshold
    m: int
    N: int
    bounds: CoverageBounds
    fallback: bool = False
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            **self.threshold.to_dict(),
            "m": self.m,
            "N": self.N,
            "fallback": self.fallback,
            "flags": list(self.flags),
            "bounds": self.bounds.to_dict(),
        }


def label_conditional_thresholds(real: LabeledScoreSet, synth: LabeledScoreSet, alpha: float,
                                 beta: float, universe: Sequence = ()) -> dict:
    """Run the synthetic-powered calibration separately within each label.

    Labels present among the synthetic scores use only their own synthetic
    scores; absent labels fall back to the whole synthetic set. A label
    without real scores is calibrated with ``m = 0`` and flagged.
    """
    alpha = _check_level("alpha", alpha)
    beta = _check_level("beta", beta)
    universe = tuple(universe) or tuple(dict.fromkeys(real.universe + synth.universe))
    in_synth = synth.present()
    result = {}
    for y in universe:
        fallback = y not in in_synth
        s_y = synth.scores if fallback else synth.scores_for(y)
        r_y = real.scores_for(y)
        thr = spi_threshold(r_y, s_y, alpha, beta)
        flags = []
        if fallback:
            flags.append("fallback: whole synthetic set")
        if r_y.size == 0:
            flags.append("no real scores")
        if conformal_index(s_y.size, alpha) > s_y.size:
            flags.append("trivial: too few synthetic scores")
        result[y] = LabelThreshold(
            label=y,
            threshold=thr,
            m=int(r_y.size),
            N=int(s_y.size),
            bounds=worst_case_bounds(r_y.size, s_y.size, alpha, beta),
            fallback=fallback,
            flags=tuple(flags),
        )
    return result
