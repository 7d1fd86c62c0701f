"""Synthetic data ``y = f0(x) + noise`` with ``x`` uniform on the unit ball.

Random streams come from numpy's Philox-4x64 counter-based generator keyed
by ``SeedSequence(seed, spawn_key=(purpose,))``, so every purpose
(projector, instances, noise, validator draws) has its own reproducible
substream.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from ..errors import SpecError
from ..regressor import Dataset

KINDS = ("single_index", "multi_index", "additive", "constant")
LINKS = ("affine", "sigmoid", "sine")

STREAM_PROJECTOR = 0
STREAM_INSTANCES = 1
STREAM_NOISE = 2
STREAM_VALIDATOR = 3
STREAM_ORACLE = 4

MC_SAMPLES = 10**6


def substream(seed, purpose, *sub):
    """Independent Philox generator for ``(seed, purpose, *sub)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(purpose, *sub))
    return np.random.Generator(np.random.Philox(ss))


def sample_ball(rng, n, d):
    """``n`` points uniform on the unit ball in ``R^d``."""
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = rng.random(n) ** (1.0 / d)
    return z * r[:, None]


@dataclass(frozen=True)
class Link:
    """Scalar link with values inside [0.1, 0.9] on [-1, 1].

    ``affine``: ``intercept + slope u``; ``sigmoid``: ``0.1 + 0.8 / (1 + e^{-scale u})``;
    ``sine``: ``0.5 + 0.4 sin(scale u)``.
    """

    name: str = "sigmoid"
    slope: float = 0.2
    intercept: float = 0.5
    scale: float = 4.0

    def __post_init__(self):
        if self.name not in LINKS:
            raise SpecError(f"unknown link {self.name!r}")
        if self.name == "affine":
            lo = self.intercept - abs(self.slope)
            hi = self.intercept + abs(self.slope)
            if lo < 0.1 - 1e-12 or hi > 0.9 + 1e-12:
                raise SpecError("affine link leaves [0.1, 0.9] on [-1, 1]")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.name == "affine":
            return self.intercept + self.slope * u
        if self.name == "sigmoid":
            return 0.1 + 0.8 * special.expit(self.scale * u)
        return 0.5 + 0.4 * np.sin(self.scale * u)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        if self.name == "affine":
            return np.full_like(u, self.slope)
        if self.name == "sigmoid":
            s = special.expit(self.scale * u)
            return 0.8 * self.scale * s * (1.0 - s)
        return 0.4 * self.scale * np.cos(self.scale * u)

    def sup_deriv(self):
        """``max |g'(u)|`` over ``u`` in [-1, 1] (attained at 0 for all links)."""
        if self.name == "affine":
            return abs(self.slope)
        if self.name == "sigmoid":
            return 0.2 * self.scale
        return 0.4 * abs(self.scale)


@dataclass(frozen=True)
class GeneratorSpec:
    """Configuration of a synthetic stream.

    ``projector`` holds the rows of ``B``; when omitted a random
    row-orthonormal ``k x d`` matrix is drawn from the seed.
    """

    kind: str = "single_index"
    dim: int = 3
    k: int = 1
    link: Link = field(default_factory=Link)
    noise_sd: float = 0.05
    seed: int = 0
    projector: Optional[tuple] = None
    constant: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown generator kind {self.kind!r}")
        if self.dim < 1 or self.k < 1 or self.k > self.dim:
            raise SpecError(f"need 1 <= k <= dim, got k={self.k}, dim={self.dim}")
        if self.noise_sd < 0:
            raise SpecError("noise_sd must be nonnegative")
        if not 0.0 <= self.constant <= 1.0:
            raise SpecError("constant must lie in [0, 1]")

    def projector_matrix(self):
        if self.kind == "additive":
            return np.eye(self.dim)
        if self.projector is not None:
            B = np.atleast_2d(np.array(self.projector, dtype=float))
            if B.shape[1] != self.dim:
                raise SpecError(f"projector has {B.shape[1]} columns, dim is {self.dim}")
            if np.max(np.abs(B @ B.T - np.eye(B.shape[0]))) > 1e-8:
                raise SpecError("projector rows are not orthonormal")
            return B
        rng = substream(self.seed, STREAM_PROJECTOR)
        Q, R = np.linalg.qr(rng.standard_normal((self.dim, self.k)))
        Q = Q * np.sign(np.diag(R))
        return Q.T.copy()

    def to_dict(self):
        out = asdict(self)
        if self.projector is not None:
            out["projector"] = [list(map(float, r)) for r in np.atleast_2d(self.projector)]
        return out

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        link = obj.pop("link", None)
        if isinstance(link, str):
            link = Link(name=link)
        elif isinstance(link, dict):
            link = Link(**link)
        proj = obj.pop("projector", None)
        if proj is not None:
            proj = tuple(tuple(float(v) for v in row) for row in np.atleast_2d(proj))
        return cls(link=link or Link(), projector=proj, **obj)

    @classmethod
    def parse(cls, text):
        """Build a spec from JSON text, a JSON file path, or a bare kind name."""
        text = text.strip()
        if text in KINDS:
            return cls(kind=text)
        if not text.startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


@dataclass
class OracleInfo:
    """Ground truth attached to a generated stream."""

    f0: Callable
    grad: Callable
    G: np.ndarray
    G_method: str
    G_se: float
    projector: np.ndarray
    spec: GeneratorSpec
    _sup_cache: dict = field(default_factory=dict, repr=False)

    def sup_norm(self, u):
        """``sup_x |grad f0(x) . u|`` over the unit ball and how it was obtained."""
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        spec = self.spec
        if spec.kind == "constant":
            return 0.0, "closed_form"
        if spec.kind == "single_index":
            b = self.projector[0]
            return spec.link.sup_deriv() * abs(float(b @ u)), "closed_form"
        return _sup_directional(self.grad, u, spec.seed), "monte_carlo_max"

    def sup_norms(self, directions):
        """Directional sup-norms along the columns of ``directions``."""
        vals, methods = zip(*(self.sup_norm(directions[:, j]) for j in range(directions.shape[1])))
        return np.array(vals), methods[0]

    def lipschitz_in_metric(self, metric):
        """``sqrt(sum_i ||grad_{u_i} f0||^2 / lambda_i)`` over the metric eigenbasis."""
        s, _ = self.sup_norms(metric.eigenvectors)
        return float(math.sqrt(np.sum(s**2 / metric.eigenvalues)))


def _sup_directional(grad, u, seed, n=20000):
    from scipy.optimize import minimize

    rng = substream(seed, STREAM_ORACLE, 1)
    P = sample_ball(rng, n, u.shape[0])
    vals = np.abs(grad(P) @ u)
    best = float(vals.max())
    x0 = P[int(np.argmax(vals))]

    def neg(x):
        r = np.linalg.norm(x)
        x = x / r if r > 1 else x
        return -abs(float(grad(x[None, :])[0] @ u))

    res = minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-12})
    return max(best, -float(res.fun))


def _projection_density_moment(h, d):
    """``E[h(b . X)]`` for ``X`` uniform on the d-ball and any unit ``b``."""
    if d == 1:
        return integrate.quad(h, -1, 1)[0] / 2.0
    dens = lambda s: (1 - s * s) ** ((d - 1) / 2.0)  # noqa: E731
    norm = integrate.quad(dens, -1, 1)[0]
    return integrate.quad(lambda s: h(s) * dens(s), -1, 1, limit=200)[0] / norm


def _build_f0(spec, B):
    g = spec.link
    if spec.kind == "constant":
        f0 = lambda X: np.full(np.atleast_2d(X).shape[0], spec.constant)  # noqa: E731
        grad = lambda X: np.zeros_like(np.atleast_2d(X), dtype=float)  # noqa: E731
    elif spec.kind in ("single_index", "multi_index"):
        k = B.shape[0]

        def f0(X):
            return g(np.atleast_2d(X) @ B.T).mean(axis=1)

        def grad(X):
            return (g.deriv(np.atleast_2d(X) @ B.T) @ B) / k
    else:
        d = spec.dim

        def f0(X):
            return g(np.atleast_2d(X)).mean(axis=1)

        def grad(X):
            return g.deriv(np.atleast_2d(X)) / d
    return f0, grad


def true_gop(spec, B, grad):
    """``E[grad f0 grad f0^T]`` with its method and Monte Carlo standard error."""
    d = spec.dim
    if spec.kind == "constant":
        return np.zeros((d, d)), "closed_form", 0.0
    if spec.kind == "single_index":
        b = B[0]
        if spec.link.name == "affine":
            m2 = spec.link.slope**2
            method = "closed_form"
        else:
            m2 = _projection_density_moment(lambda s: float(spec.link.deriv(s)) ** 2, d)
            method = "quadrature"
        return m2 * np.outer(b, b), method, 0.0
    rng = substream(spec.seed, STREAM_ORACLE, 0)
    P = sample_ball(rng, MC_SAMPLES, d)
    Gr = grad(P)
    outer = Gr[:, :, None] * Gr[:, None, :]
    G = outer.mean(axis=0)
    se = float(np.max(outer.std(axis=0)) / math.sqrt(MC_SAMPLES))
    return 0.5 * (G + G.T), "monte_carlo", se


def oracle_for(spec):
    B = spec.projector_matrix()
    f0, grad = _build_f0(spec, B)
    G, method, se = true_gop(spec, B, grad)
    return OracleInfo(f0, grad, G, method, se, B, spec)


def generate(spec: GeneratorSpec, n, with_oracle=True):
    """Draw ``n`` i.i.d. labeled examples and the matching :class:`OracleInfo`.

    Noise is Gaussian truncated at three standard deviations; labels are
    then clipped to [0, 1].
    """
    if n < 1:
        raise SpecError("n must be >= 1")
    B = spec.projector_matrix()
    f0, grad = _build_f0(spec, B)
    X = sample_ball(substream(spec.seed, STREAM_INSTANCES), n, spec.dim)
    y = f0(X)
    if spec.noise_sd > 0:
        rng = substream(spec.seed, STREAM_NOISE)
        z = rng.standard_normal(n)
        bad = np.abs(z) > 3.0
        while bad.any():
            z[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(z) > 3.0
        y = y + spec.noise_sd * z
    y = np.clip(y, 0.0, 1.0)
    data = Dataset(X, y)
    if not with_oracle:
        return data, None
    G, method, se = true_gop(spec, B, grad)
    return data, OracleInfo(f0, grad, G, method, se, B, spec)
