"""How fast the spectrum decays decides how many directions the learner pays for.

The effective rank at horizon t counts the eigenvalues of the metric that
stay above t ** (-2 / (1 + r)). A metric with a single dominant direction
behaves like a one-dimensional problem for a long time, and only at very
long horizons does it start paying for the weak directions.
"""
import numpy as np

from metricreg import effective_rank, kappa, spectral_normalize, truncated_determinant

profiles = {
    "identity": np.ones(5),
    "one strong direction": np.array([1.0, 1e-3, 1e-3, 1e-3, 1e-3]),
    "geometric decay": 0.3 ** np.arange(5),
}
horizons = [1e1, 1e2, 1e3, 1e4, 1e6, 1e9]

print("effective rank rho_t")
print(f"{'profile':>22} " + " ".join(f"{t:>7.0e}" for t in horizons))
for name, lam in profiles.items():
    print(f"{name:>22} " + " ".join(f"{effective_rank(lam, t):>7d}" for t in horizons))

# kappa(r, t) is the number of eigenvalues above the r-dependent threshold;
# rho_t is the first r where that count no longer exceeds r
lam = profiles["geometric decay"]
t = 1e4
print(f"\nkappa(r, {t:.0e}) for geometric decay:",
      [kappa(lam, r, t) for r in range(1, 6)])

# the radius the regressor uses shrinks like t ** (-1 / (1 + rho_t))
for name, lam in profiles.items():
    eps = [t ** (-1 / (1 + effective_rank(lam, t))) for t in horizons]
    print(f"radius, {name:>22}: " + " ".join(f"{e:.3f}" for e in eps))

# truncated determinants bound the volume term of the packing argument
m = spectral_normalize(np.diag(profiles["geometric decay"]))
print("\ntruncated determinants:",
      [round(truncated_determinant(m.spectrum, k), 6) for k in range(1, 6)])
