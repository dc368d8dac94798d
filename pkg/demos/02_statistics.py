"""
Medians, bootstrap intervals and Wilson intervals
=================================================

Continuous results are summarised as median, IQR and a percentile bootstrap
interval of the median. Success rates get Wilson score intervals.
"""

import numpy as np

from cegb.stats import BootstrapConfig, quantile, summarize, wilson_interval

# %%
# Quantiles interpolate linearly between order statistics.
print(quantile([1, 2, 3, 4], 0.25), quantile([1, 2, 3, 4], 0.5))

# %%
# The bootstrap is seeded, so the interval is reproducible.
rng = np.random.default_rng(0)
cycle_times = 3.91 + 0.03 * rng.standard_normal(32)
cfg = BootstrapConfig(resamples=2000, seed=42)
s = summarize(cycle_times, cfg)
print(f"median {s.median:.3f} s, IQR [{s.q1:.3f}, {s.q3:.3f}], CI {s.ci95[0]:.3f}..{s.ci95[1]:.3f}")
assert summarize(cycle_times, cfg) == s

# %%
# Wilson intervals stay inside [0, 1] even at the boundaries.
for g, n in [(0, 10), (9, 10), (5, 5)]:
    lo, hi = wilson_interval(g, n)
    print(f"{g}/{n}: [{lo:.3f}, {hi:.3f}]")

# %%
# Child configurations keep metric families on independent streams.
print(cfg.derive("nist").seed, cfg.derive("energy").seed)
