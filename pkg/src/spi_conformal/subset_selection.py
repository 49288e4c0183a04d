"""Choose synthetic score groups that look most like the real scores.

Distances are two-sample Cramér-von Mises statistics computed from pooled
ranks; the ``k`` closest groups are pooled into the synthetic calibration set.
"""

from __future__ import annotations

from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, TieError
from .transporter import ScoreVector, as_scores

__all__ = ["GroupedScores", "SubsetSelection", "cvm_statistic", "select_subsets"]


def cvm_statistic(x, y) -> float:
    """Two-sample Cramér-von Mises statistic of distinct samples ``x`` and ``y``.

    ``T = U / (N M (N + M)) - (4 M N - 1) / (6 (M + N))`` with
    ``U = N sum_i (r_(i) - i)^2 + M sum_j (s_(j) - j)^2`` over pooled ranks.

    Raises
    ------
    TieError
        If the pooled sample contains ties; jitter the scores first.
    """
    x = np.asarray(as_scores(x).values)
    y = np.asarray(as_scores(y).values)
    n, mm = x.size, y.size
    if n == 0 or mm == 0:
        raise DomainError("both samples must be nonempty")
    pooled = np.concatenate((x, y))
    order = np.argsort(pooled, kind="stable")
    if np.any(np.diff(pooled[order]) == 0):
        raise TieError("pooled samples contain ties; jitter the scores before computing distances")
    ranks = np.empty(n + mm, dtype=np.int64)
    ranks[order] = np.arange(1, n + mm + 1)
    rx = np.sort(ranks[:n])
    ry = np.sort(ranks[n:])
    u = n * int(np.sum((rx - np.arange(1, n + 1)) ** 2)) + mm * int(np.sum((ry - np.arange(1, mm + 1)) ** 2))
    return u / (n * mm * (n + mm)) - (4 * mm * n - 1) / (6 * (mm + n))


@dataclass(frozen=True, eq=False)
class GroupedScores:
    """``L`` equally sized groups of synthetic scores keyed by identifier."""

    ids: tuple
    groups: tuple

    def __post_init__(self):
        groups = tuple(as_scores(g) for g in self.groups)
        ids = tuple(self.ids) if self.ids else tuple(range(len(groups)))
        if len(ids) != len(groups):
            raise DomainError("one identifier per group is required")
        if len(set(ids)) != len(ids):
            raise DomainError("group identifiers must be unique")
        sizes = {len(g) for g in groups}
        if len(sizes) > 1:
            raise DomainError(f"all groups must have the same size, got sizes {sorted(sizes)}")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_array(cls, arr, ids: Sequence[Hashable] = ()) -> "GroupedScores":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DomainError("expected an (L, n) array of scores")
        return cls(tuple(ids), tuple(arr))

    @property
    def L(self) -> int:
        return len(self.groups)

    @property
    def n(self) -> int:
        return len(self.groups[0]) if self.groups else 0

    def pooled(self, ids=None) -> ScoreVector:
        idx = range(self.L) if ids is None else [self.ids.index(i) for i in ids]
        return ScoreVector(np.concatenate([self.groups[i].values for i in idx]))


@dataclass(frozen=True)
class SubsetSelection:
    ids: tuple
    distances: dict
    pooled: ScoreVector

    @property
    def size(self) -> int:
        return len(self.pooled)


def select_subsets(real, grouped: GroupedScores, k: int) -> SubsetSelection:
    """Pick the ``k`` groups with the smallest distance to the real scores.

    Equal distances are broken by ascending group identifier. Selected
    identifiers come back in ascending order and the pooled set always holds
    ``n * k`` scores.
    """
    if not 1 <= k <= grouped.L:
        raise DomainError(f"k must lie in [1, {grouped.L}], got {k}")
    real = as_scores(real)
    dist = np.array([cvm_statistic(real, g) for g in grouped.groups])
    id_rank = np.empty(grouped.L, dtype=np.int64)
    id_rank[sorted(range(grouped.L), key=lambda i: grouped.ids[i])] = np.arange(grouped.L)
    chosen = sorted(np.lexsort((id_rank, dist))[:k].tolist(), key=lambda i: id_rank[i])
    ids = tuple(grouped.ids[i] for i in chosen)
    return SubsetSelection(
        ids=ids,
        distances={grouped.ids[i]: float(d) for i, d in enumerate(dist)},
        pooled=ScoreVector(np.concatenate([grouped.groups[i].values for i in chosen])),
    )
