"""Symmetric eigendecomposition and Mahalanobis geometry.

Everything here is a pure function of its inputs. Matrices are plain
``numpy`` arrays; :class:`Spectrum` and :class:`Metric` are frozen
containers whose arrays are marked read-only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotPositiveDefinite, NumericalFailure

MAX_SWEEPS = 100
PD_THRESHOLD = 1e-14


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_symmetric(A, tol=1e-10):
    """Return ``A`` as a float array that is exactly symmetric.

    Asymmetry up to ``tol * max(1, max|A|)`` is averaged away; anything
    larger is rejected.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending with matching orthonormal eigenvectors.

    ``eigenvectors[:, i]`` is the unit vector paired with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def _rotate(A, V, p, q):
    apq = A[p, q]
    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    # A <- J^T A J with J the (p, q) Givens rotation
    ap = A[:, p].copy()
    aq = A[:, q].copy()
    A[:, p] = c * ap - s * aq
    A[:, q] = s * ap + c * aq
    ap = A[p, :].copy()
    aq = A[q, :].copy()
    A[p, :] = c * ap - s * aq
    A[q, :] = s * ap + c * aq
    A[p, q] = A[q, p] = 0.0
    vp = V[:, p].copy()
    vq = V[:, q].copy()
    V[:, p] = c * vp - s * vq
    V[:, q] = s * vp + c * vq


def eig_sym(A, max_sweeps=MAX_SWEEPS):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Symmetric matrix with finite entries.
    max_sweeps : int
        Cap on full sweeps over the upper triangle.

    Returns
    -------
    Spectrum
        Eigenvalues in descending order. Each eigenvector is signed so
        that its first nonzero coordinate is positive.

    Raises
    ------
    NumericalFailure
        If the off-diagonal mass has not vanished after ``max_sweeps``.
    """
    A = as_symmetric(A)
    d = A.shape[0]
    V = np.eye(d)
    norm = np.linalg.norm(A)
    if norm == 0.0 or d == 1:
        return _finish(np.diag(A).copy(), V)
    tol = (np.finfo(float).eps * norm) ** 2
    for _ in range(max_sweeps):
        off = np.sum(np.triu(A, 1) ** 2)
        if off <= tol:
            return _finish(np.diag(A).copy(), V)
        for p in range(d - 1):
            for q in range(p + 1, d):
                if abs(A[p, q]) > 1e-300:
                    _rotate(A, V, p, q)
    if np.sum(np.triu(A, 1) ** 2) <= tol:
        return _finish(np.diag(A).copy(), V)
    raise NumericalFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def _finish(w, V):
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-14)
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return Spectrum(_frozen(w), _frozen(V))


@dataclass(frozen=True)
class Metric:
    """Positive definite matrix with unit spectral radius and its spectrum."""

    matrix: np.ndarray
    spectrum: Spectrum

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def eigenvalues(self):
        return self.spectrum.eigenvalues

    @property
    def eigenvectors(self):
        return self.spectrum.eigenvectors

    @property
    def transform(self):
        """Matrix ``L`` with ``||L (x - z)||_2 == ||x - z||_M``."""
        return np.sqrt(self.eigenvalues)[:, None] * self.eigenvectors.T

    @classmethod
    def identity(cls, d):
        return spectral_normalize(np.eye(d))


def spectral_normalize(A):
    """Scale a positive definite matrix to unit spectral radius.

    The returned metric has eigenvalues ``lambda_i(A) / lambda_1(A)``,
    with the top one set to exactly 1.

    Raises
    ------
    NotPositiveDefinite
        If ``lambda_d(A) <= 1e-14 * lambda_1(A)`` or ``lambda_1(A) <= 0``.
    """
    spec = eig_sym(A)
    w = spec.eigenvalues
    top = w[0]
    if not top > 0 or w[-1] <= PD_THRESHOLD * top:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[-1]:.3e} is not positive relative to {top:.3e}"
        )
    w = w / top
    w[0] = 1.0
    V = spec.eigenvectors
    M = as_symmetric(np.asarray(A, dtype=float) / top)
    return Metric(_frozen(M), Spectrum(_frozen(w), V))


def mahalanobis_distance(metric, x, z):
    """``sqrt((x - z)^T M (x - z))`` for a :class:`Metric` or raw matrix."""
    M = metric.matrix if isinstance(metric, Metric) else np.asarray(metric, dtype=float)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    d = M.shape[0]
    if x.shape != (d,) or z.shape != (d,):
        raise DimensionError(f"points of shape {x.shape}, {z.shape} for a {d}x{d} metric")
    diff = x - z
    return math.sqrt(max(0.0, float(diff @ M @ diff)))


def truncated_determinant(spectrum, k):
    """Product of the ``k`` largest eigenvalues."""
    w = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    if not 1 <= k <= len(w):
        raise IndexError(f"k={k} outside 1..{len(w)}")
    return float(np.prod(w[:k]))


def principal_angles(A, B):
    """Principal angles (radians, ascending) between the column spans of A and B."""
    qa, _ = np.linalg.qr(np.atleast_2d(np.asarray(A, dtype=float)))
    qb, _ = np.linalg.qr(np.atleast_2d(np.asarray(B, dtype=float)))
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.sort(np.arccos(np.clip(s, -1.0, 1.0)))


def matrix_to_json(A):
    A = as_symmetric(A)
    return {"dim": int(A.shape[0]), "rows": A.tolist()}


def matrix_from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    A = np.array(obj["rows"], dtype=float)
    if A.shape != (obj["dim"], obj["dim"]):
        raise DimensionError(f"rows have shape {A.shape} but dim is {obj['dim']}")
    return as_symmetric(A)
