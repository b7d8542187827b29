#!/usr/bin/env python3
"""Regions whose extents are not multiples of m-1: bracketed approximation.

When T_j / (m_j - 1) is fractional the cascade runs at the floored and the
next integer ratio; the true CDF value sits between the two runs and the
reported point interpolates linearly by the mean fractional part.  The demo
uses a deliberately awkward 26^3 region with a 5^3 window (26/4 = 6.5).
"""

from scanstat3d import DistributionModel, PipelineConfig, ScanGeometry, interpolated_cdf

geometry = ScanGeometry(region=(26, 26, 26), window=(5, 5, 5))
model = DistributionModel.bernoulli(0.003)
config = PipelineConfig(iterations=20_000, seed=8)

print(f"{model.describe()} over {geometry.region}, window {geometry.window}")
levels, fracs = geometry.floor_levels()
print(f"floored ratios {levels}, fractional parts {tuple(round(f, 3) for f in fracs)}\n")

for n in (4, 5, 6):
    rep = interpolated_cdf(geometry, model, n, config)
    tag = "  (noise-inverted bracket)" if rep.bracket_inverted else ""
    print(f"n={n}:")
    print(f"  coarse-ratio run  (L={rep.upper.levels[0]}): {rep.upper.point:.8f}")
    print(f"  fine-ratio run    (L={rep.lower.levels[0]}): {rep.lower.point:.8f}{tag}")
    print(f"  interpolated (weight {rep.weight:.3f}):   {rep.point:.8f}")
    print(f"  bracket [{rep.bracket[0]:.8f}, {rep.bracket[1]:.8f}], total error {rep.total:.2e}\n")
