"""
Worst-case coverage bounds
==========================

The coverage of a synthetic-powered prediction set is bracketed by two
numbers that depend only on the real sample size ``m``, the synthetic sample
size ``N``, the level ``alpha`` and the window budget ``beta``. They hold
whatever the synthetic scores look like.
"""

import numpy as np

from spi_conformal import run_bound_sweep, select_beta, window_table, worst_case_bounds

###############################################################################
# Fifteen real scores and a thousand synthetic ones at 90% target coverage:

b = worst_case_bounds(15, 1000, alpha=0.1, beta=0.4)
print(f"lower {b.lower:.4f}  upper {b.upper:.4f}")

###############################################################################
# Both ends are multiples of ``1 / (m + 1)``. Each real rank contributes a
# window of synthetic ranks, and a bound counts how many windows sit below
# the conformal index ``ceil((1 - alpha)(N + 1))``.

table = window_table(15, 1000, 0.4)
for r, (lo, hi) in enumerate(table.rows, start=1):
    print(f"rank {r:2d}: synthetic ranks {lo:4d} .. {hi:4d}")

###############################################################################
# More real data tightens the interval.

for row in run_bound_sweep([5, 10, 20, 50, 100, 200], [0.4], [0.1], 1000):
    print(f"m={row.m:3d}: [{row.lower:.3f}, {row.upper:.3f}]  width {row.upper - row.lower:.3f}")

###############################################################################
# A larger ``beta`` narrows every window, which can only raise the lower
# bound. ``select_beta`` finds the smallest grid value meeting a target.

betas = np.round(np.arange(0.05, 1.0, 0.05), 2)
lows = [worst_case_bounds(15, 1000, 0.1, b).lower for b in betas]
print(dict(zip(betas.tolist(), lows)))
print("smallest beta with lower >= 0.8125:", select_beta(15, 1000, 0.1, 0.8125))
