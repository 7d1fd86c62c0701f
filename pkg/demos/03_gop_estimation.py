"""Estimating the gradient outer product from noisy samples.

A kernel smoother is differenced along each axis, and coordinates whose
probes land in sparsely sampled regions are masked out. The average outer
product of these gradients concentrates on the index direction as n grows.
"""
import numpy as np

from metricreg import BandwidthSchedule, estimate_gop, principal_angles
from metricreg.harness import GeneratorSpec, generate

spec = GeneratorSpec(kind="single_index", dim=3, k=1, noise_sd=0.05, seed=3)
data, oracle = generate(spec, 2**14)
sched = BandwidthSchedule()
b = oracle.projector.T

print(f"{'n':>6} {'eps_n':>7} {'tau_n':>7} {'masked':>7} {'error':>7} {'angle':>7}")
for k in range(8, 15):
    n = 2**k
    est = estimate_gop(data[:n], sched)
    err = np.linalg.norm(est.matrix - oracle.G, 2)
    top = np.linalg.eigh(est.matrix)[1][:, -1:]
    angle = np.degrees(principal_angles(top, b)[0])
    print(f"{n:>6} {est.eps:>7.3f} {est.tau:>7.3f} {est.mask_rate:>7.3f} {err:>7.4f} {angle:>6.2f}d")

print("\ntrue G (rank one):\n", np.round(oracle.G, 4))
print("estimate at n = 2**14:\n", np.round(est.matrix, 4))
