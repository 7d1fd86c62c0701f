"""The phased learner: restart on a doubling schedule with a freshly learned metric.

Phase i runs for 2**i rounds under the metric estimated at the end of the
previous phase, regularized by t ** -alpha. Early phases see almost no
signal and stay near the identity; later phases lock onto the index
direction and the effective rank drops to one.
"""
import numpy as np

from metricreg import RegularizationSchedule, run_phased
from metricreg.harness import GeneratorSpec, generate

T = 2**13
data, oracle = generate(GeneratorSpec(kind="single_index", dim=5, k=1, seed=2), T)
outs, diags = run_phased(data, RegularizationSchedule(alpha=1.0), comparator=oracle.f0(data.X))

print(f"{'phase':>5} {'rounds':>13} {'regret':>7} {'centers':>7} {'rho':>3}  next metric eigenvalues")
for g in diags:
    nxt = "-" if g.next_metric_eigenvalues is None else np.array2string(
        g.next_metric_eigenvalues, precision=4, suppress_small=True)
    print(f"{g.phase:>5} {g.start:>6}-{g.end:<6} {g.regret:>7.2f} {g.n_centers:>7} "
          f"{g.rho_last:>3}  {nxt}")
print(f"\ntotal regret {sum(g.regret for g in diags):.2f}")
