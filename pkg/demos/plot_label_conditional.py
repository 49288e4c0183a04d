"""
Label-conditional calibration
=============================

Coverage can be required separately within each class. Each label is
calibrated with its own real and synthetic scores. A label with no synthetic
scores borrows the whole synthetic set, and the result says so.
"""

import numpy as np

from spi_conformal import LabeledScoreSet, aps_score, label_conditional_thresholds

rng = np.random.default_rng(2)

###############################################################################
# Scores from a toy three-class model: adaptive prediction set scores of the
# true label with a uniform randomization term.


def simulate(n, classes):
    out = []
    for _ in range(n):
        y = rng.choice(classes)
        probs = rng.dirichlet(np.ones(3) * 0.7)
        out.append((y, aps_score(probs, "abc".index(y), rng.uniform())))
    return out


real = LabeledScoreSet.from_pairs(simulate(60, list("abc")))
synth = LabeledScoreSet.from_pairs(simulate(3000, list("ab")))

for label, res in label_conditional_thresholds(real, synth, alpha=0.1, beta=0.4).items():
    flags = ", ".join(res.flags) or "-"
    print(f"{label}: cutoff {res.threshold.cutoff:.4f}  m={res.m:2d}  N={res.N:4d}  "
          f"bounds [{res.bounds.lower:.3f}, {res.bounds.upper:.3f}]  {flags}")
