"""CSV readers for score files and small JSON helpers."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .calibration import LabeledScoreSet
from .exceptions import DomainError
from .subset_selection import GroupedScores
from .transporter import ScoreVector

__all__ = ["read_grouped_csv", "read_json", "read_labeled_csv", "read_scores_csv"]


def _rows(path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise DomainError(f"{path}: expected header with columns {list(required)}, missing {missing}")
        reader.fieldnames = header
        return list(reader)


def _float(value: str, path, lineno: int) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{path}:{lineno}: cannot parse score {value!r}") from None


def read_scores_csv(path: str | Path) -> ScoreVector:
    """Scores from a CSV with a ``score`` column, one value per row."""
    rows = _rows(path, ("score",))
    return ScoreVector([_float(r["score"], path, i + 2) for i, r in enumerate(rows)])


def read_labeled_csv(path: str | Path) -> LabeledScoreSet:
    """Labeled scores from a CSV with ``label,score`` columns; labels are kept as strings."""
    rows = _rows(path, ("label", "score"))
    return LabeledScoreSet.from_pairs((r["label"].strip(), _float(r["score"], path, i + 2)) for i, r in enumerate(rows))


def read_grouped_csv(path: str | Path) -> GroupedScores:
    """Grouped synthetic scores from a CSV with ``group,score`` columns.

    Groups keep their order of first appearance and must all be the same size.
    """
    rows = _rows(path, ("group", "score"))
    groups: dict[str, list[float]] = {}
    for i, r in enumerate(rows):
        groups.setdefault(r["group"].strip(), []).append(_float(r["score"], path, i + 2))
    if not groups:
        raise DomainError(f"{path}: no groups found")
    return GroupedScores(tuple(groups), tuple(groups.values()))


def read_json(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)
