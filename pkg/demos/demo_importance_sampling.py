#!/usr/bin/env python3
"""Why importance sampling: tail estimates a naive scan cannot resolve.

Estimates P(S >= tau) for a rare-event configuration two ways and compares
half-widths at the same iteration budget.  The seeded-window construction
guarantees every iteration contributes (the count of exceeding origins is at
least one), so the estimator keeps working far past the point where naive
hit-or-miss stops seeing any exceedance at all.
"""

import numpy as np

from scanstat3d import DistributionModel, ScanGeometry, is_tail_estimate, naive_scan_estimate

model = DistributionModel.bernoulli(0.0005)
region, window = (30, 30, 30), (5, 5, 5)
iterations = 20_000

print(f"{model.describe()} over {region}, window {window}, {iterations} iterations\n")
print(f"{'tau':>4} {'IS tail':>13} {'IS beta':>10} {'naive beta @ same n':>20} {'ratio':>7}")
for tau in (3, 4, 5, 6):
    est = is_tail_estimate(region, window, model, tau, iterations, seed=2024)
    q = 1.0 - est.tail
    naive_beta = 1.96 * np.sqrt(q * (1 - q) / iterations)
    ratio = naive_beta / est.beta if est.beta else float("inf")
    print(f"{tau:>4} {est.tail:>13.3e} {est.beta:>10.1e} {naive_beta:>20.1e} {ratio:>7.1f}x")

print("\nhit-or-miss at the same budget for the deepest tail:")
naive = naive_scan_estimate(ScanGeometry(region, window), model, 5, iterations, seed=2024)
print(f"  P(S <= 5) = {naive.p_hat}  ->  observed exceedances: {round((1 - naive.p_hat) * iterations)}")
print("  (the naive run rarely sees a single event this deep; the IS estimate")
print("   above still carries a meaningful confidence half-width)")
