"""Numerical checks of the packing, Lipschitz and monotonicity statements.

Each validator returns a report with an explicit pass flag and the slack
it measured, so a failure points at the configuration that broke.
"""
import numpy as np

from metricreg import Metric, spectral_normalize
from metricreg.harness import substream
from metricreg.harness import validators as val
from metricreg.regressor import OnlineRegressor

rng = substream(0, 3, 0)

# packing: run the regressor on adversarial grid data and count centers
metric = val.random_metric(rng, 2, max_condition=50)
reg = OnlineRegressor(metric)
for x in val.grid_stream(2, 4096):
    reg.step(x, 0.5)
rep = val.validate_packing_bound(reg)
print(f"packing: {rep.n_centers} centers <= bound {rep.bound:.0f} (s = {rep.s}), "
      f"pairwise separation holds: {rep.packing_property}")

# Lipschitz in the metric, with pairs aligned to the equality direction
m = spectral_normalize(np.diag([1.0, 0.2]))
rep = val.validate_lipschitz(m, val.AffineFunction([0.0, 1.0]), rng)
print(f"lipschitz: L = {rep.lipschitz:.4f}, worst random ratio {rep.max_ratio:.4f}, "
      f"aligned ratio {rep.aligned_max_ratio:.6f}")

# volumetric bound, exact in one dimension and Monte Carlo in two
rep = val.validate_volumetric_bound(Metric.identity(1), 0.5, rng)
print(f"volumetric, exact interval: greedy {rep.packing_size}, largest possible "
      f"{rep.exact_max_packing}, bound {rep.bound}")
rep = val.validate_volumetric_bound(spectral_normalize(np.diag([1.0, 0.25])), 0.25, rng,
                                    mc_samples=400_000)
print(f"volumetric, ellipse: greedy {rep.packing_size} <= {rep.bound:.1f} +- {rep.bound_se:.1f}; "
      f"denominator MC {rep.denominator_volume:.5f} vs closed form {rep.denominator_exact:.5f}")

# the phase-condition map never decreases
reps = [val.monotone_map_grid(mu, a, d) for mu, a, d in val.random_monotone_triples(rng, 10)]
print(f"monotone map: {sum(r.passed for r in reps)}/10 triples pass, "
      f"smallest step {min(r.min_increment for r in reps):.2e}")
