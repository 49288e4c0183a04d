"""
Choosing synthetic groups
=========================

When synthetic scores come in groups (for example one group per generating
prompt), keeping the groups whose scores look most like the real ones can
shrink the distribution gap. Distances are two-sample Cramér-von Mises
statistics.
"""

import numpy as np

from spi_conformal import GroupedScores, cvm_statistic, select_subsets, spi_threshold

print(cvm_statistic([1, 3], [2, 4]), cvm_statistic([1, 2], [3, 4]))

###############################################################################
# A hundred groups of fifteen scores with random offsets; the real scores are
# centred at zero.

rng = np.random.default_rng(5)
offsets = rng.uniform(-2, 2, 100)
grouped = GroupedScores.from_array(rng.normal(size=(100, 15)) + offsets[:, None])
real = rng.normal(size=15)

sel = select_subsets(real, grouped, k=20)
print("pooled size:", sel.size)
print("mean |offset| chosen vs all:", np.abs(offsets[list(sel.ids)]).mean().round(3),
      np.abs(offsets).mean().round(3))

###############################################################################
# Calibrate on the chosen groups or on everything.

print("selected :", spi_threshold(real, sel.pooled, 0.1, 0.4).cutoff)
print("all      :", spi_threshold(real, grouped.pooled(), 0.1, 0.4).cutoff)
