"""Gradient outer product estimation from kernel regression.

The regression function is estimated by a normalized kernel smoother with
bandwidth ``eps_n``. Its gradient at a point is approximated by central
differences with step ``tau_n`` along each axis; a coordinate is zeroed
unless both probe points have enough empirical mass within ``eps_n / 2``.
The estimate is the average outer product of these gradients over the
data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .regressor import Dataset

def kernel(u, kind="triangular"):
    """Nonincreasing kernel on ``[0, inf)``, positive on ``[0, 1)``, zero from 1 on."""
    u = np.asarray(u, dtype=float)
    if kind == "triangular":
        out = np.maximum(0.0, 1.0 - u)
    elif kind == "epanechnikov":
        out = np.maximum(0.0, 1.0 - u * u)
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BandwidthSchedule:
    """Rules ``n -> eps_n`` and ``n -> tau_n``.

    ``eps_n = max(c_eps * log(n+1)**(2/d) * n**(-1/(2(d+1))),
    c_lo * log(n+1)**(2/d) * n**(-1/d))`` and
    ``tau_n = min(0.99 * tau0, c_tau * eps_n ** 0.25)``.
    """

    c_eps: float = 0.4
    tau0: float = 0.5
    c_tau: float = 0.2
    c_lo: float = 3.0
    kernel: str = "triangular"

    def lower(self, n, d):
        return self.c_lo * math.log(n + 1) ** (2.0 / d) * n ** (-1.0 / d)

    def eps(self, n, d):
        upper = self.c_eps * math.log(n + 1) ** (2.0 / d) * n ** (-1.0 / (2 * (d + 1)))
        return max(upper, self.lower(n, d))

    def tau(self, n, d):
        return min(0.99 * self.tau0, self.c_tau * self.eps(n, d) ** 0.25)


@dataclass(frozen=True)
class GopEstimate:
    matrix: np.ndarray
    n: int
    eps: float
    tau: float
    mask_rate: float
    grad_max: float = 0.0
    gradients: np.ndarray = field(default=None, repr=False)


@numba.njit(cache=True, fastmath=True)
def _smooth_kernel(Q, XT, y, lo, hi, eps, epanechnikov, mass_r2, est, mass):
    m, d = Q.shape
    n = XT.shape[1]
    # accumulate label offsets from y[0] so that constant labels smooth exactly
    y0 = y[0]
    ybar = 0.0
    for j in range(n):
        ybar += y[j] - y0
    ybar /= n
    inv = 1.0 / eps
    d2 = np.empty(n)
    for i in range(m):
        a = lo[i]
        L = hi[i] - a
        buf = d2[:L]
        buf[:] = 0.0
        for k in range(d):
            qk = Q[i, k]
            row = XT[k, a:a + L]
            for j in range(L):
                diff = qk - row[j]
                buf[j] += diff * diff
        yy = y[a:a + L]
        total = 0.0
        num = 0.0
        cnt = 0.0
        if epanechnikov:
            for j in range(L):
                w = max(0.0, 1.0 - buf[j] * inv * inv)
                total += w
                num += w * (yy[j] - y0)
                cnt += 1.0 if buf[j] <= mass_r2 else 0.0
        else:
            for j in range(L):
                w = max(0.0, 1.0 - math.sqrt(buf[j]) * inv)
                total += w
                num += w * (yy[j] - y0)
                cnt += 1.0 if buf[j] <= mass_r2 else 0.0
        # no data point inside the open ball: fall back to uniform weights
        est[i] = y0 + (num / total if total > 0.0 else ybar)
        mass[i] = cnt / n


def _smooth(Q, X, y, eps, kind="triangular", mass_radius=None):
    """Kernel-smoothed labels at query points ``Q``.

    Also returns, when ``mass_radius`` is given, the fraction of data
    within that (closed) radius of each query.
    """
    if kind not in ("triangular", "epanechnikov"):
        raise ValueError(f"unknown kernel {kind!r}")
    Q = np.ascontiguousarray(np.atleast_2d(Q), dtype=float)
    # sort by the first coordinate so each query scans only a slab of data
    order = np.argsort(X[:, 0], kind="stable")
    X = np.asarray(X, dtype=float)[order]
    y = np.ascontiguousarray(np.asarray(y, dtype=float)[order])
    reach = max(float(eps), 0.0 if mass_radius is None else float(mass_radius))
    lo = np.searchsorted(X[:, 0], Q[:, 0] - reach, side="left")
    hi = np.searchsorted(X[:, 0], Q[:, 0] + reach, side="right")
    est = np.empty(Q.shape[0])
    mass = np.empty(Q.shape[0])
    r2 = -1.0 if mass_radius is None else float(mass_radius) ** 2
    _smooth_kernel(Q, np.ascontiguousarray(X.T), y, lo, hi, float(eps), kind == "epanechnikov", r2, est, mass)
    return est, (mass if mass_radius is not None else None)


def _as_data(data):
    if not isinstance(data, Dataset):
        data = Dataset.from_examples(data)
    if len(data) == 0:
        raise ValueError("dataset is empty")
    return data


def kernel_weights(data, x, eps_n, kind="triangular"):
    """Weights ``omega_t(x)``: normalized kernel values, or ``1/n`` if all vanish."""
    data = _as_data(data)
    u = np.linalg.norm(data.X - np.asarray(x, dtype=float), axis=1) / eps_n
    k = kernel(u, kind)
    s = k.sum()
    if s > 0:
        return k / s
    return np.full(len(data), 1.0 / len(data))


def kernel_regress(data, x, eps_n, kind="triangular"):
    """Kernel regression estimate at ``x`` (a point or an array of points)."""
    data = _as_data(data)
    x = np.asarray(x, dtype=float)
    est, _ = _smooth(np.atleast_2d(x), data.X, data.y, eps_n, kind)
    return float(est[0]) if x.ndim == 1 else est


def _gradients(X, y, P, eps, tau, kind):
    """Masked central-difference gradients of the smoother at points ``P``."""
    n, d = X.shape
    m = P.shape[0]
    probes = np.empty((2 * d, m, d))
    for i in range(d):
        probes[2 * i] = P
        probes[2 * i, :, i] += tau
        probes[2 * i + 1] = P
        probes[2 * i + 1, :, i] -= tau
    est, mass = _smooth(probes.reshape(-1, d), X, y, eps, kind, mass_radius=eps / 2)
    est = est.reshape(d, 2, m)
    mass = mass.reshape(d, 2, m)
    delta = (est[:, 0] - est[:, 1]) / (2.0 * tau)
    threshold = (2.0 * d / n) * math.log(2 * n)
    active = mass.min(axis=1) >= threshold
    return np.where(active, delta, 0.0).T, active.T


def finite_diff_gradient(data, x, eps_n, tau_n, kind="triangular"):
    """Masked finite-difference gradient of the kernel smoother at ``x``.

    Coordinate ``i`` is the central difference with step ``tau_n`` along
    ``e_i``, kept only if both ``x +- tau_n e_i`` have an empirical mass of
    at least ``(2d/n) ln(2n)`` within the closed ball of radius
    ``eps_n / 2``; otherwise it is 0.
    """
    data = _as_data(data)
    x = np.asarray(x, dtype=float)
    g, _ = _gradients(data.X, data.y, np.atleast_2d(x), eps_n, tau_n, kind)
    return g[0] if x.ndim == 1 else g


def estimate_gop(data, schedule=None, keep_gradients=False):
    """Average outer product of masked gradient estimates over all data points.

    Bandwidths are taken from ``schedule`` at ``n = len(data)``.
    """
    data = _as_data(data)
    schedule = schedule or BandwidthSchedule()
    n, d = data.X.shape
    eps = schedule.eps(n, d)
    tau = schedule.tau(n, d)
    grads, active = _gradients(data.X, data.y, data.X, eps, tau, schedule.kernel)
    G = grads.T @ grads / n
    G = 0.5 * (G + G.T)
    return GopEstimate(
        matrix=G,
        n=n,
        eps=eps,
        tau=tau,
        mask_rate=float(1.0 - active.mean()),
        grad_max=float(np.linalg.norm(grads, axis=1).max()) if grads.size else 0.0,
        gradients=grads if keep_gradients else None,
    )
