"""Conformal prediction sets calibrated with the help of synthetic scores.

A small set of real calibration scores is mapped onto a larger synthetic
score set through rank windows, which yields prediction sets whose coverage
is bracketed by computable worst-case bounds.
"""

from .analysis import (
    ContinuousDist,
    LocScale,
    LogNormal,
    Mixture,
    Normal,
    Uniform,
    dist_from_spec,
    order_stat_density,
    tv_order_stat,
)
from .calibration import (
    CoverageBounds,
    LabeledScoreSet,
    LabelThreshold,
    PredictionThreshold,
    conformal_index,
    label_conditional_thresholds,
    select_beta,
    spi_member_direct,
    spi_threshold,
    split_conformal_threshold,
    synth_quantile,
    worst_case_bounds,
)
from .combinatorics import (
    OrderStatPmf,
    WindowTable,
    log_binomial,
    order_stat_cdf,
    order_stat_pmf,
    window_hit_probability,
    window_rank_bounds,
    window_table,
)
from .exceptions import (
    ConfigurationError,
    DegenerateFitError,
    DomainError,
    QuadratureError,
    SPIError,
    TieError,
)
from .scores import AffineAdjustment, QuantilePair, affine_adjust_fit, aps_score, cqr_interval, cqr_score, jitter
from .simulation import (
    TrialConfig,
    TrialReport,
    run_bound_sweep,
    run_coverage_experiment,
    run_equivalence_check,
    run_lemma1_check,
)
from .subset_selection import GroupedScores, SubsetSelection, cvm_statistic, select_subsets
from .transporter import ScoreVector, ScoreWindow, as_scores, rank_among, score_window, transport

__version__ = "0.1.0"
