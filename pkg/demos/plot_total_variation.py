"""
How far apart are the order statistics?
=======================================

Beyond the worst case, coverage deviates from ``1 - alpha`` by at most
``beta`` plus the average total variation distance between matching order
statistics of ``m + 1`` real and synthetic draws.
"""

from scipy import special

from spi_conformal import LogNormal, Normal, tv_order_stat

###############################################################################
# A single draw: the distance between two unit normals one apart.

print(tv_order_stat(Normal(0, 1), Normal(1, 1), 0), 2 * special.ndtr(0.5) - 1)

###############################################################################
# Order statistics of larger samples separate faster, so the term grows with
# ``m`` for a fixed shift.

for m in (0, 5, 15, 30):
    print(m, [round(tv_order_stat(Normal(), Normal(s, 1.0), m), 4) for s in (0.1, 0.5, 1.0)])

###############################################################################
# Shape differences count as well.

print(round(tv_order_stat(Normal(1.0, 0.5), LogNormal(0.0, 0.5), 15), 4))
