"""Numerical checks of the packing, Lipschitz and monotonicity guarantees.

Every validator returns a report dataclass with an explicit ``passed``
flag, the measured slack, and (for Monte Carlo checks) sample counts and
standard errors. ``to_dict`` gives the machine-readable form.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from ..linalg import Metric, eig_sym, spectral_normalize
from ..regressor import OnlineRegressor
from .generators import Link, sample_ball


class _Report:
    def to_dict(self):
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, (np.floating, np.integer, np.bool_)):
                v = v.item()
            elif isinstance(v, Fraction):
                v = str(v)
            out[k] = v
        return out


# -- ellipsoid packing bound -------------------------------------------------

def packing_bound(eigenvalues, eps):
    """``(8 sqrt(2) / eps) ** s * prod_{i <= s} sqrt(lambda_i)`` and ``s``.

    ``s`` is the number of eigenvalues with ``sqrt(lambda_i) >= eps``.
    """
    root = np.sqrt(np.asarray(eigenvalues, dtype=float))
    s = int(np.count_nonzero(root >= eps))
    return float((8.0 * math.sqrt(2.0) / eps) ** s * np.prod(root[:s])), s


@dataclass
class PackingReport(_Report):
    n_centers: int
    rounds: int
    eps_T: float
    s: int
    bound: float
    passed: bool
    slack: float
    packing_property: bool
    min_pair_margin: float


def validate_packing_bound(state: OnlineRegressor):
    """Compare the number of centers after a run with the ellipsoid packing bound.

    Also checks the packing property itself: every pair of anchors is
    farther apart (in the metric) than the radius in force when the later
    one was created.
    """
    T = state.round
    eps = state.radius(max(T, 1))
    bound, s = packing_bound(state.metric.eigenvalues, eps)
    n = state.n_centers
    margin = math.inf
    if n > 1:
        Z = state.anchors @ state.metric.transform.T
        radii = state.creation_radii
        for j in range(1, n):
            dist = np.sqrt(np.sum((Z[:j] - Z[j]) ** 2, axis=1))
            margin = min(margin, float(dist.min() - radii[j]))
    return PackingReport(
        n_centers=n, rounds=T, eps_T=eps, s=s, bound=bound, passed=n <= bound,
        slack=bound - n, packing_property=margin > 0, min_pair_margin=margin,
    )


def grid_stream(d, T, spacing=None):
    """Points of a cubic grid clipped to the unit ball, cycled to length ``T``.

    With the default spacing the grid holds roughly ``T`` points, which
    pushes the regressor toward creating as many centers as it can.
    """
    if spacing is None:
        spacing = 2.0 / max(2.0, T ** (1.0 / d))
    axis = np.arange(-1.0, 1.0 + 1e-12, spacing)
    pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
    pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0]
    reps = int(math.ceil(T / len(pts)))
    return np.tile(pts, (reps, 1))[:T]


# -- Lipschitz in the metric -------------------------------------------------

class AffineFunction:
    """``f(x) = w . x + c``."""

    def __init__(self, w, c=0.0):
        self.w = np.asarray(w, dtype=float)
        self.c = float(c)

    def __call__(self, X):
        return np.atleast_2d(X) @ self.w + self.c

    def sup_directional(self, u):
        return abs(float(self.w @ u))

    def tight_direction(self, metric):
        # equality in Cauchy-Schwarz: x - x' parallel to M^{-1} w
        return np.linalg.solve(metric.matrix, self.w)


class QuadraticFunction:
    """``f(x) = x^T A x / 2 + w . x``; ``A`` symmetric."""

    def __init__(self, A, w):
        self.A = np.asarray(A, dtype=float)
        self.w = np.asarray(w, dtype=float)

    def __call__(self, X):
        X = np.atleast_2d(X)
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.A, X) + X @ self.w

    def sup_directional(self, u):
        # sup over the unit ball of |u . (A x + w)|
        return abs(float(self.w @ u)) + float(np.linalg.norm(self.A @ u))

    def tight_direction(self, metric):
        return None


class SingleIndexFunction:
    """``f(x) = g(b . x)`` for a unit vector ``b`` and a scalar link."""

    def __init__(self, b, link=None):
        b = np.asarray(b, dtype=float)
        self.b = b / np.linalg.norm(b)
        self.link = link or Link()

    def __call__(self, X):
        return self.link(np.atleast_2d(X) @ self.b)

    def sup_directional(self, u):
        return self.link.sup_deriv() * abs(float(self.b @ u))

    def tight_direction(self, metric):
        return None


@dataclass
class LipschitzReport(_Report):
    n_pairs: int
    lipschitz: float
    max_ratio: float
    max_excess: float
    violations: int
    aligned_max_ratio: float
    passed: bool


def metric_lipschitz(metric, fn):
    """``sqrt(sum_i ||grad_{u_i} f||_inf^2 / lambda_i)`` in the eigenbasis of the metric."""
    U = metric.eigenvectors
    s = np.array([fn.sup_directional(U[:, i]) for i in range(metric.dim)])
    return float(math.sqrt(np.sum(s**2 / metric.eigenvalues)))


def validate_lipschitz(metric: Metric, fn, rng, n_pairs=10**4, slack=1e-9, n_aligned=100):
    """Check ``|f(x) - f(x')| <= ||x - x'||_M * L`` on random pairs in the unit ball.

    Pairs aligned with the equality direction (affine functions only) are
    added to measure how tight the bound gets.
    """
    d = metric.dim
    L = metric_lipschitz(metric, fn)
    X = sample_ball(rng, n_pairs, d)
    Xp = sample_ball(rng, n_pairs, d)
    W = metric.transform
    diff = (X - Xp) @ W.T
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    lhs = np.abs(fn(X) - fn(Xp))
    rhs = dist * L
    excess = lhs - rhs
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, 0.0)
    aligned = float("nan")
    v = fn.tight_direction(metric)
    if v is not None and np.linalg.norm(v) > 0:
        v = v / np.linalg.norm(v)
        base = sample_ball(rng, n_aligned, d) * 0.5
        step = 0.05 + 0.45 * rng.random(n_aligned)
        A, Ap = base + step[:, None] * v, base - step[:, None] * v
        da = np.sqrt(np.einsum("ij,ij->i", (A - Ap) @ W.T, (A - Ap) @ W.T))
        la = np.abs(fn(A) - fn(Ap))
        if L > 0:
            aligned = float(np.max(la / (da * L)))
        excess = np.concatenate([excess, la - da * L])
    violations = int(np.count_nonzero(excess > slack))
    return LipschitzReport(
        n_pairs=n_pairs, lipschitz=L, max_ratio=float(ratio.max()),
        max_excess=float(excess.max()), violations=violations,
        aligned_max_ratio=aligned, passed=violations == 0,
    )


# -- volumetric packing bound ------------------------------------------------

def _dist_to_unit_ball(P, lam, U, iters=100):
    """``min_{||b|| <= 1} ||p - b||_M`` for each row of ``P``."""
    Q = P @ U
    out = np.zeros(P.shape[0])
    outside = np.einsum("ij,ij->i", Q, Q) > 1.0
    if not outside.any():
        return out
    q = Q[outside]
    lo = np.zeros(q.shape[0])
    hi = lam.max() * np.linalg.norm(q, axis=1)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        b = lam * q / (lam + mid[:, None])
        big = np.einsum("ij,ij->i", b, b) > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    b = lam * q / (lam + hi[:, None])
    out[outside] = np.sqrt(np.einsum("ij,ij->i", (q - b) ** 2, np.broadcast_to(lam, q.shape)))
    return out


def greedy_packing(metric, eps, rng, proposals=10**5, chunk=2000):
    """Greedy ``eps``-packing of the unit ball from uniform random proposals.

    A proposal is kept iff its metric distance to every kept point exceeds
    ``eps``. Returns the kept points in the original coordinates.
    """
    d = metric.dim
    W = metric.transform
    kept = np.empty((0, d))
    kept_z = np.empty((0, d))
    done = 0
    while done < proposals:
        m = min(chunk, proposals - done)
        P = sample_ball(rng, m, d)
        Z = P @ W.T
        if kept_z.shape[0]:
            d2 = (np.einsum("ij,ij->i", Z, Z)[:, None] + np.einsum("ij,ij->i", kept_z, kept_z)[None, :]
                  - 2.0 * Z @ kept_z.T)
            far = d2.min(axis=1) > eps * eps * (1 + 1e-9)
            P, Z = P[far], Z[far]
        for p, z in zip(P, Z):
            if kept_z.shape[0] == 0 or np.min(np.sum((kept_z - z) ** 2, axis=1)) > eps * eps:
                kept = np.vstack([kept, p])
                kept_z = np.vstack([kept_z, z])
        done += m
    return kept


@dataclass
class VolumetricReport(_Report):
    dim: int
    eps: float
    packing_size: int
    bound: float
    bound_se: float
    numerator_volume: float
    numerator_se: float
    denominator_volume: float
    denominator_se: float
    denominator_exact: float
    mc_samples: int
    proposals: int
    method: str
    passed: bool
    slack: float
    exact_max_packing: object = None


def _mc_volume(inside, half_widths, rng, n, chunk=200_000):
    hits = 0
    box = float(np.prod(2.0 * half_widths))
    done = 0
    while done < n:
        m = min(chunk, n - done)
        P = (rng.random((m, half_widths.size)) * 2.0 - 1.0) * half_widths
        hits += int(np.count_nonzero(inside(P)))
        done += m
    p = hits / n
    return box * p, box * math.sqrt(p * (1.0 - p) / n)


def validate_volumetric_bound(metric: Metric, eps, rng, proposals=10**5, mc_samples=10**6):
    """Greedy packing size versus ``vol(B + (eps/2) B') / vol((eps/2) B')``.

    ``B`` is the Euclidean unit ball and ``B'`` the unit ball of the
    metric. In one dimension both sides are computed exactly; otherwise the
    volumes are Monte Carlo estimates and the check allows three standard
    errors.
    """
    d = metric.dim
    if d > 3:
        raise ValueError("Monte Carlo volumes are only supported for d <= 3")
    r = eps / 2.0
    packing = greedy_packing(metric, eps, rng, proposals)
    size = packing.shape[0]
    if d == 1:
        root = Fraction(math.sqrt(float(metric.matrix[0, 0])))
        e = Fraction(eps)
        # [-1, 1] has metric length 2 * root; a packing has gaps > eps
        exact_max = max(1, math.ceil(2 * root / e))
        bound = (2 + e / root) / (e / root)
        return VolumetricReport(
            dim=1, eps=eps, packing_size=size, bound=float(bound), bound_se=0.0,
            numerator_volume=float(2 + e / root), numerator_se=0.0,
            denominator_volume=float(e / root), denominator_se=0.0,
            denominator_exact=float(e / root), mc_samples=0, proposals=proposals,
            method="exact", passed=size <= exact_max <= bound, slack=float(bound - size),
            exact_max_packing=exact_max,
        )
    spec = eig_sym(metric.matrix)
    lam = spec.eigenvalues
    U = spec.eigenvectors
    reach = np.sqrt(np.diag(np.linalg.inv(metric.matrix)))
    num, num_se = _mc_volume(lambda P: _dist_to_unit_ball(P, lam, U) <= r,
                             1.0 + r * reach, rng, mc_samples)
    M = metric.matrix
    den, den_se = _mc_volume(lambda P: np.einsum("ij,jk,ik->i", P, M, P) <= r * r,
                             r * reach, rng, mc_samples)
    unit_ball = math.pi ** (d / 2) / special.gamma(d / 2 + 1)
    den_exact = unit_ball * r**d / math.sqrt(float(np.prod(lam)))
    bound = num / den
    bound_se = bound * math.sqrt((num_se / num) ** 2 + (den_se / den) ** 2)
    return VolumetricReport(
        dim=d, eps=eps, packing_size=size, bound=bound, bound_se=bound_se,
        numerator_volume=num, numerator_se=num_se, denominator_volume=den,
        denominator_se=den_se, denominator_exact=den_exact, mc_samples=mc_samples,
        proposals=proposals, method="monte_carlo", passed=size <= bound + 3 * bound_se,
        slack=bound + 3 * bound_se - size,
    )


# -- monotonicity of the phase-condition map ---------------------------------

@dataclass
class MonotoneReport(_Report):
    mu_d: float
    alpha: float
    d: int
    T0: float
    grid_points: int
    min_increment: float
    passed: bool


def monotone_map_grid(mu_d, alpha, d, t_max=1e4, step=0.01, slack=1e-12):
    """Check that ``F(t) = (mu_d + 2 (T0 + t)^-alpha) t^(2/(1+d))`` never decreases.

    ``T0 = ceil(((d + 1) / (2 mu_d)) ** (1 / alpha))`` and ``t`` runs over
    ``1, 1 + step, ..., t_max``.
    """
    T0 = float(math.ceil(((d + 1) / (2.0 * mu_d)) ** (1.0 / alpha)))
    k = int(round((t_max - 1.0) / step))
    t = 1.0 + step * np.arange(k + 1)
    F = (mu_d + 2.0 * (T0 + t) ** (-alpha)) * t ** (2.0 / (1 + d))
    inc = np.diff(F)
    return MonotoneReport(mu_d=float(mu_d), alpha=float(alpha), d=int(d), T0=T0,
                          grid_points=int(t.size), min_increment=float(inc.min()),
                          passed=bool(np.all(inc >= -slack)))


def random_monotone_triples(rng, n=100, max_dim=10, alphas=(0.25, 0.5, 1.0)):
    """``(mu_d, alpha, d)`` with ``mu_d`` uniform on (0, 1]."""
    out = []
    for _ in range(n):
        mu = 1.0 - rng.random()
        out.append((mu, float(rng.choice(alphas)), int(rng.integers(1, max_dim + 1))))
    return out


# -- eigenvalue sandwich at a phase end --------------------------------------

@dataclass
class SandwichReport(_Report):
    gamma_bar: float
    estimation_error: float
    premise_holds: bool
    checked: bool
    passed: bool
    lower_margin: float
    upper_margin: float


def eigenvalue_sandwich(G_true, G_hat, gamma_bar, tol=1e-12):
    """Check ``mu_j <= mu_hat_j + gamma_bar <= mu_j + 2 gamma_bar`` for all ``j``.

    Only meaningful when ``||G_hat - G||_2 <= gamma_bar``; otherwise the
    check is skipped and reported as such.
    """
    mu = eig_sym(G_true).eigenvalues
    mu_hat = eig_sym(G_hat).eigenvalues
    err = float(np.linalg.norm(np.asarray(G_hat) - np.asarray(G_true), 2))
    premise = err <= gamma_bar
    lower = float(np.min(mu_hat + gamma_bar - mu))
    upper = float(np.min(mu + 2 * gamma_bar - (mu_hat + gamma_bar)))
    ok = lower >= -tol and upper >= -tol
    return SandwichReport(
        gamma_bar=float(gamma_bar), estimation_error=err, premise_holds=premise,
        checked=premise, passed=ok if premise else True,
        lower_margin=lower, upper_margin=upper,
    )


def random_metric(rng, d, max_condition=100.0):
    """Random unit-spectral-radius metric with condition number at most ``max_condition``."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    lam = np.exp(-rng.random(d) * math.log(max_condition))
    lam[0] = 1.0
    return spectral_normalize((Q * lam) @ Q.T)
