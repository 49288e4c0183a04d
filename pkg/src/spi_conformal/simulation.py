"""Deterministic Monte Carlo checks of the coverage guarantees.

Every trial draws its randomness from a generator seeded by the pair
``(master_seed, trial index)`` alone, so reports are identical whatever the
number of worker processes. Coverage of a trial is the exact conditional
probability ``P(S <= cutoff)`` under the known real score distribution.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import ContinuousDist, Normal, dist_from_spec
from .calibration import (
    CoverageBounds,
    LabeledScoreSet,
    _encode,
    _spi_cutoff,
    label_conditional_thresholds,
    spi_member_direct,
    split_conformal_threshold,
    worst_case_bounds,
)
from .combinatorics import window_table
from .exceptions import ConfigurationError, SPIError
from .scores import affine_adjust_fit
from .subset_selection import GroupedScores, select_subsets
from .transporter import ScoreVector

__all__ = [
    "METHODS",
    "EquivalenceReport",
    "LabelSpec",
    "WindowHitReport",
    "SubsetSpec",
    "TrialConfig",
    "TrialRecord",
    "TrialReport",
    "bounds_to_csv",
    "equivalence_disagreements",
    "run_bound_sweep",
    "run_coverage_experiment",
    "run_equivalence_check",
    "run_lemma1_check",
    "trial_rng",
]

METHODS = ("only-real", "only-synth", "spi", "spi-subset", "spi-affine", "label-conditional")


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for one work unit, derived statelessly from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),)))


@dataclass(frozen=True)
class SubsetSpec:
    """``L`` synthetic groups of ``n`` scores, ``k`` of which are kept."""

    L: int
    n: int
    k: int
    group_dists: tuple = ()

    def to_dict(self) -> dict:
        d = {"L": self.L, "n": self.n, "k": self.k}
        if self.group_dists:
            d["group_dists"] = [g.to_dict() for g in self.group_dists]
        return d


@dataclass(frozen=True)
class LabelSpec:
    """One class of a label-conditional experiment."""

    label: str
    weight: float
    p: ContinuousDist
    q: ContinuousDist
    synth_weight: float | None = None

    def to_dict(self) -> dict:
        d = {"label": self.label, "weight": self.weight, "p": self.p.to_dict(), "q": self.q.to_dict()}
        if self.synth_weight is not None:
            d["synth_weight"] = self.synth_weight
        return d


@dataclass(frozen=True)
class TrialConfig:
    m: int
    N: int
    alpha: float
    beta: float = 0.4
    p_dist: ContinuousDist = field(default_factory=Normal)
    q_dist: ContinuousDist = field(default_factory=Normal)
    trials: int = 1000
    master_seed: int = 0
    method: str = "spi"
    subset: SubsetSpec | None = None
    labels: tuple = ()

    def validate(self) -> "TrialConfig":
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")
        if self.m < 0 or self.N < 1:
            raise ConfigurationError(f"need m >= 0 and N >= 1, got m={self.m}, N={self.N}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigurationError(f"{name} must lie in (0, 1), got {v}")
        if self.method == "spi-affine" and not 2 <= self.m <= self.N:
            raise ConfigurationError("spi-affine needs 2 <= m <= N")
        if self.method == "spi-subset":
            s = self.subset
            if s is None:
                raise ConfigurationError("spi-subset needs a subset specification (L, n, k)")
            if s.L < 1 or s.n < 1 or not 1 <= s.k <= s.L:
                raise ConfigurationError(f"invalid subset specification {s}")
            if s.L * s.n != self.N:
                raise ConfigurationError(f"subset groups hold L*n = {s.L * s.n} scores but N = {self.N}")
        if self.method == "label-conditional":
            if not self.labels:
                raise ConfigurationError("label-conditional needs a label list")
            w = np.array([lab.weight for lab in self.labels])
            sw = np.array([lab.weight if lab.synth_weight is None else lab.synth_weight for lab in self.labels])
            if np.any(w < 0) or w.sum() <= 0 or np.any(sw < 0) or sw.sum() <= 0:
                raise ConfigurationError("label weights must be nonnegative with positive total")
        return self

    def to_dict(self) -> dict:
        d = {
            "m": self.m,
            "N": self.N,
            "alpha": self.alpha,
            "beta": self.beta,
            "p_dist": self.p_dist.to_dict(),
            "q_dist": self.q_dist.to_dict(),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "method": self.method,
        }
        if self.subset is not None:
            d["subset"] = self.subset.to_dict()
        if self.labels:
            d["labels"] = [lab.to_dict() for lab in self.labels]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialConfig":
        known = {"m", "N", "alpha", "beta", "p_dist", "q_dist", "trials", "master_seed", "method",
                 "subset", "labels"}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            subset = None
            if d.get("subset") is not None:
                s = d["subset"]
                subset = SubsetSpec(int(s["L"]), int(s["n"]), int(s["k"]),
                                    tuple(dist_from_spec(g) for g in s.get("group_dists", ())))
            labels = tuple(
                LabelSpec(str(lab["label"]), float(lab["weight"]), dist_from_spec(lab["p"]),
                          dist_from_spec(lab["q"]),
                          None if lab.get("synth_weight") is None else float(lab["synth_weight"]))
                for lab in d.get("labels", ())
            )
            cfg = cls(
                m=int(d["m"]),
                N=int(d["N"]),
                alpha=float(d["alpha"]),
                beta=float(d.get("beta", 0.4)),
                p_dist=dist_from_spec(d.get("p_dist", {"family": "normal"})),
                q_dist=dist_from_spec(d.get("q_dist", {"family": "normal"})),
                trials=int(d.get("trials", 1000)),
                master_seed=int(d.get("master_seed", 0)),
                method=str(d.get("method", "spi")),
                subset=subset,
                labels=labels,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SPIError):
                raise
            raise ConfigurationError(f"malformed configuration: {exc!r}") from exc
        return cfg.validate()


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    threshold: float | tuple
    coverage: float
    trivial: bool
    label_coverage: tuple = ()


def _fmt(x: float) -> str:
    e = _encode(x)
    return e if isinstance(e, str) else repr(e)


@dataclass(frozen=True, eq=False)
class TrialReport:
    """Per-trial records plus aggregates recomputed from them on demand."""

    config: TrialConfig
    records: tuple
    bounds: CoverageBounds | None

    @property
    def coverages(self) -> np.ndarray:
        return np.array([r.coverage for r in self.records])

    @property
    def aggregate(self) -> dict:
        v = self.coverages
        t = v.size
        mean = float(np.mean(v))
        finite = [r.threshold for r in self.records
                  if not isinstance(r.threshold, tuple) and math.isfinite(r.threshold)]
        out = {
            "trials": t,
            "mean_coverage": mean,
            # Bernoulli standard error of a covered-test-point indicator; it
            # dominates the spread of the exact per-trial coverages.
            "coverage_se": math.sqrt(max(mean * (1 - mean), 0.0) / t),
            "coverage_sd": float(np.std(v, ddof=1)) if t > 1 else 0.0,
            "empirical_se": float(np.std(v, ddof=1) / math.sqrt(t)) if t > 1 else 0.0,
            "coverage_quantiles": {f"{q:.2f}": float(np.quantile(v, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)},
            "mean_threshold": float(np.mean(finite)) if finite else None,
            "fraction_trivial": sum(r.trivial for r in self.records) / t,
        }
        if self.config.method == "label-conditional":
            lc = np.array([r.label_coverage for r in self.records])
            out["per_label_mean_coverage"] = {
                lab.label: float(c) for lab, c in zip(self.config.labels, lc.mean(axis=0))
            }
        return out

    @property
    def mean_coverage(self) -> float:
        return float(np.mean(self.coverages))

    @property
    def coverage_se(self) -> float:
        return self.aggregate["coverage_se"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "threshold", "coverage", "trivial"])
        for r in self.records:
            thr = ";".join(_fmt(x) for x in r.threshold) if isinstance(r.threshold, tuple) else _fmt(r.threshold)
            w.writerow([r.trial, thr, repr(r.coverage), int(r.trivial)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "bounds": None if self.bounds is None else self.bounds.to_dict(),
            "aggregate": self.aggregate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _cov(dist: ContinuousDist, cutoff: float) -> float:
    return float(dist.cdf(cutoff))


def _simulate_trial(cfg: TrialConfig, t: int) -> TrialRecord:
    rng = trial_rng(cfg.master_seed, t)
    method = cfg.method

    if method == "label-conditional":
        return _label_conditional_trial(cfg, t, rng)

    real = ScoreVector(cfg.p_dist.sample(rng, cfg.m))
    if method == "spi-subset" and cfg.subset.group_dists:
        gd = cfg.subset.group_dists
        synth_raw = np.concatenate([gd[g % len(gd)].sample(rng, cfg.subset.n) for g in range(cfg.subset.L)])
    else:
        synth_raw = cfg.q_dist.sample(rng, cfg.N)

    if method == "only-real":
        cutoff = split_conformal_threshold(real, cfg.alpha).cutoff
    elif method == "only-synth":
        cutoff = split_conformal_threshold(ScoreVector(synth_raw), cfg.alpha).cutoff
    else:
        if method == "spi-affine":
            synth = affine_adjust_fit(real, ScoreVector(synth_raw)).apply(synth_raw)
        elif method == "spi-subset":
            s = cfg.subset
            grouped = GroupedScores.from_array(synth_raw.reshape(s.L, s.n))
            synth = select_subsets(real, grouped, s.k).pooled
        else:
            synth = ScoreVector(synth_raw)
        table = window_table(cfg.m, len(synth), cfg.beta)
        cutoff = _spi_cutoff(real, synth, cfg.alpha, table).cutoff
    return TrialRecord(t, cutoff, _cov(cfg.p_dist, cutoff), cutoff == math.inf)


def _label_conditional_trial(cfg: TrialConfig, t: int, rng: np.random.Generator) -> TrialRecord:
    labs = cfg.labels
    w = np.array([lab.weight for lab in labs], dtype=np.float64)
    w /= w.sum()
    sw = np.array([lab.weight if lab.synth_weight is None else lab.synth_weight for lab in labs])
    sw = sw / sw.sum()
    real_lab = rng.choice(len(labs), size=cfg.m, p=w)
    synth_lab = rng.choice(len(labs), size=cfg.N, p=sw)
    real_scores = np.empty(cfg.m)
    synth_scores = np.empty(cfg.N)
    for i, lab in enumerate(labs):
        idx = np.flatnonzero(real_lab == i)
        real_scores[idx] = lab.p.sample(rng, idx.size)
        idx = np.flatnonzero(synth_lab == i)
        synth_scores[idx] = lab.q.sample(rng, idx.size)
    names = np.array([lab.label for lab in labs], dtype=object)
    universe = tuple(lab.label for lab in labs)
    res = label_conditional_thresholds(
        LabeledScoreSet(names[real_lab], real_scores, universe),
        LabeledScoreSet(names[synth_lab], synth_scores, universe),
        cfg.alpha,
        cfg.beta,
        universe,
    )
    cutoffs = tuple(res[lab.label].threshold.cutoff for lab in labs)
    per_label = tuple(_cov(lab.p, c) for lab, c in zip(labs, cutoffs))
    coverage = float(np.dot(w, per_label))
    return TrialRecord(t, cutoffs, coverage, any(c == math.inf for c in cutoffs), per_label)


def _run_chunk(args) -> list:
    cfg, start, stop = args
    return [_simulate_trial(cfg, t) for t in range(start, stop)]


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(total / (4 * workers)))
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _map_chunks(fn, payload, total: int, workers: int) -> list:
    """Apply ``fn((payload, start, stop))`` over trial chunks, results in trial order."""
    if workers <= 1:
        return fn((payload, 0, total))
    jobs = [(payload, a, b) for a, b in _chunks(total, workers)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(fn, jobs):
            out.extend(part)
    return out


def run_coverage_experiment(config: TrialConfig | dict, workers: int = 1) -> TrialReport:
    """Run ``config.trials`` independent calibrations and record their exact coverage.

    Methods: ``only-real`` (split conformal on real scores), ``only-synth``
    (split conformal on synthetic scores), ``spi``, ``spi-affine`` (synthetic
    scores refitted to the real ones first), ``spi-subset`` (k nearest
    synthetic groups) and ``label-conditional``.
    """
    cfg = TrialConfig.from_dict(config) if isinstance(config, dict) else config.validate()
    records = _map_chunks(_run_chunk, cfg, cfg.trials, workers)
    bounds = None
    if cfg.method in ("spi", "spi-affine", "spi-subset"):
        n_eff = cfg.subset.n * cfg.subset.k if cfg.method == "spi-subset" else cfg.N
        bounds = worst_case_bounds(cfg.m, n_eff, cfg.alpha, cfg.beta)
    return TrialReport(cfg, tuple(records), bounds)


def run_bound_sweep(m_values, beta_values, alpha_values, N: int) -> list[CoverageBounds]:
    """Worst-case bounds over the product of the ``m``, ``beta`` and ``alpha`` grids."""
    m_values, beta_values, alpha_values = list(m_values), list(beta_values), list(alpha_values)
    if not (m_values and beta_values and alpha_values):
        raise ConfigurationError("sweep grids must be nonempty")
    return [
        worst_case_bounds(int(m), int(N), float(a), float(b))
        for a in alpha_values
        for b in beta_values
        for m in m_values
    ]


def bounds_to_csv(rows: list[CoverageBounds]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "N", "alpha", "beta", "lower", "upper"])
    for b in rows:
        w.writerow([b.m, b.N, repr(b.alpha), repr(b.beta), repr(b.lower), repr(b.upper)])
    return buf.getvalue()


@dataclass(frozen=True, eq=False)
class WindowHitReport:
    """Per-rank frequency with which ``S_(r)`` lands inside its window."""

    m: int
    N: int
    beta: float
    trials: int
    hits: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.hits / self.trials

    @property
    def se(self) -> np.ndarray:
        f = self.frequencies
        return np.sqrt(f * (1 - f) / self.trials)


def _window_hit_chunk(args) -> list:
    (m, N, beta, dist, seed), start, stop = args
    table = window_table(m, N, beta)
    out = []
    for t in range(start, stop):
        rng = trial_rng(seed, t)
        real = np.sort(dist.sample(rng, m + 1))
        synth = np.concatenate((np.sort(dist.sample(rng, N)), [np.inf]))
        lower = synth[table.lo - 1]
        upper = synth[table.hi - 1]
        out.append((lower <= real) & (real <= upper))
    return out


def run_lemma1_check(m: int, N: int, beta: float, dist: ContinuousDist, trials: int,
                     master_seed: int, workers: int = 1) -> WindowHitReport:
    """Monte Carlo frequency of each real order statistic falling inside its window when real and synthetic scores share ``dist``."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    window_table(m, N, beta)
    rows = _map_chunks(_window_hit_chunk, (int(m), int(N), float(beta), dist, int(master_seed)), trials, workers)
    hits = np.sum(np.array(rows, dtype=np.int64), axis=0)
    return WindowHitReport(int(m), int(N), float(beta), int(trials), hits)


def _candidate_grid(real: ScoreVector, synth: ScoreVector, include_synthetic_values: bool) -> np.ndarray:
    pooled = np.sort(np.concatenate((real.values, synth.values)))
    gaps = np.diff(pooled)
    positive = gaps[gaps > 0]
    span = float(pooled[-1] - pooled[0]) or 1.0
    eps = float(positive.min()) / 4 if positive.size else 1e-6 * span
    cand = np.concatenate((
        real.values,
        real.values - eps,
        real.values + eps,
        synth.values - eps,
        synth.values + eps,
        (pooled[1:] + pooled[:-1]) / 2,
        [pooled[0] - 1.0, pooled[-1] + 1.0],
    ))
    if include_synthetic_values:
        cand = np.concatenate((cand, synth.values))
    else:
        cand = cand[~np.isin(cand, synth.values)]
    return np.unique(cand)


def equivalence_disagreements(real, synth, alpha: float, beta: float, candidates=None,
                              include_synthetic_values: bool = False) -> tuple[int, int]:
    """Count candidates where transport-based membership and the closed-form cutoff disagree.

    Returns ``(disagreements, candidates_checked)``. The default grid holds
    every real score, all scores shifted by a quarter of the smallest gap in
    either direction, and midpoints between neighbouring pooled scores.
    Exact synthetic score values are excluded unless requested, since the
    two constructions may legitimately differ there.
    """
    real = real if isinstance(real, ScoreVector) else ScoreVector(real)
    synth = synth if isinstance(synth, ScoreVector) else ScoreVector(synth)
    table = window_table(len(real), len(synth), beta)
    if candidates is None:
        candidates = _candidate_grid(real, synth, include_synthetic_values)
    candidates = np.asarray(candidates, dtype=np.float64)
    cutoff = _spi_cutoff(real, synth, alpha, table).cutoff
    direct = spi_member_direct(candidates, real, synth, alpha, beta, table=table)
    return int(np.count_nonzero(np.asarray(direct) != (candidates <= cutoff))), int(candidates.size)


@dataclass(frozen=True)
class EquivalenceReport:
    instances: int
    disagreements: int
    candidates: int
    failing_instances: tuple = ()


def _random_instance(rng: np.random.Generator):
    m = int(rng.integers(2, 31))
    N = int(rng.integers(10, 2001))
    alpha = float(rng.uniform(0.01, 0.5))
    beta = float(rng.uniform(0.01, 0.99))
    real = rng.normal(rng.normal(0.0, 1.5), rng.uniform(0.3, 3.0), m)
    synth = rng.normal(0.0, 1.0, N)
    return real, synth, alpha, beta


def _equivalence_chunk(args) -> list:
    (seed, include), start, stop = args
    out = []
    for i in range(start, stop):
        real, synth, alpha, beta = _random_instance(trial_rng(seed, i))
        out.append(equivalence_disagreements(real, synth, alpha, beta, include_synthetic_values=include))
    return out


def run_equivalence_check(instances: int, master_seed: int, include_synthetic_values: bool = False,
                          workers: int = 1) -> EquivalenceReport:
    """Compare both prediction-set constructions over random continuous instances.

    Instances draw ``m`` in [2, 30], ``N`` in [10, 2000], ``alpha`` in
    [0.01, 0.5] and ``beta`` in [0.01, 0.99], with real and synthetic scores
    from differently located and scaled normals.
    """
    if instances < 1:
        raise ConfigurationError("instances must be >= 1")
    rows = _map_chunks(_equivalence_chunk, (int(master_seed), bool(include_synthetic_values)), instances, workers)
    failing = tuple(i for i, (d, _) in enumerate(rows) if d)
    return EquivalenceReport(
        instances=int(instances),
        disagreements=sum(d for d, _ in rows),
        candidates=sum(c for _, c in rows),
        failing_instances=failing,
    )
