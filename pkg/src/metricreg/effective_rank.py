"""Spectral-decay functionals: kappa, effective rank and eigenvalue separations.

Profiles are descending sequences of positive eigenvalues. ``kappa`` and
``effective_rank`` expect a normalized profile (top value 1); the tilde
variants take raw eigenvalues plus a regularization offset.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def as_profile(values, normalized=False):
    """Validate a descending eigenvalue profile and return it as a float array."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise DomainError("profile must be a non-empty finite sequence")
    if np.any(np.diff(v) > 0):
        raise DomainError("profile must be sorted in descending order")
    if v[0] <= 0:
        raise DomainError("top eigenvalue must be positive")
    if normalized and abs(v[0] - 1.0) > 1e-12:
        raise DomainError(f"profile is not normalized (top value {v[0]!r})")
    return v


def _check_rt(d, r, t):
    if not (isinstance(r, (int, np.integer)) and 1 <= r <= d):
        raise DomainError(f"r={r!r} outside 1..{d}")
    if not t >= 1:
        raise DomainError(f"t={t!r} must be >= 1")


def _count_at_least(values, threshold):
    # values descending: number of leading entries >= threshold
    asc = [-float(v) for v in values]
    return bisect.bisect_right(asc, -threshold)


def kappa(profile, r, t):
    """Largest ``m`` with ``lambda_m >= t ** (-2 / (1 + r))`` (0 if none)."""
    v = as_profile(profile, normalized=True)
    _check_rt(v.size, r, t)
    m = _count_at_least(v, t ** (-2.0 / (1 + r)))
    assert m >= 1, "a normalized profile always meets a threshold <= 1"
    return m


def effective_rank(profile, t):
    """Smallest ``r`` in ``1..d`` with ``kappa(r, t) <= r``."""
    v = as_profile(profile, normalized=True)
    d = v.size
    if not t >= 1:
        raise DomainError(f"t={t!r} must be >= 1")
    for r in range(1, d + 1):
        if kappa(v, r, t) <= r:
            return r
    return d


class RankTracker:
    """Cached effective rank for a fixed normalized profile.

    ``rho(t)`` is what the online regressor calls every round, so it avoids
    re-validating the profile.
    """

    def __init__(self, profile):
        v = as_profile(profile, normalized=True)
        self.d = v.size
        self._asc = [-float(x) for x in v]

    def kappa(self, r, t):
        return bisect.bisect_right(self._asc, -(t ** (-2.0 / (1 + r))))

    def rho(self, t):
        for r in range(1, self.d + 1):
            if self.kappa(r, t) <= r:
                return r
        return self.d


def kappa_tilde(mu, gamma_bar_t, r, t):
    """Largest ``m`` with ``mu_m + 2 gamma_bar_t >= mu_1 t ** (-2 / (1 + r))``."""
    v = as_profile(mu)
    _check_rt(v.size, r, t)
    if gamma_bar_t < 0:
        raise DomainError("gamma_bar_t must be nonnegative")
    thr = v[0] * t ** (-2.0 / (1 + r))
    return int(np.count_nonzero(v + 2.0 * gamma_bar_t >= thr))


def effective_rank_tilde(mu, gamma_bar_t, t):
    v = as_profile(mu)
    for r in range(1, v.size + 1):
        if kappa_tilde(v, gamma_bar_t, r, t) <= r:
            return r
    return v.size


@dataclass(frozen=True)
class SeparationReport:
    """Eigenvalue gaps and the induced split of eigen-indices (0-based)."""

    deltas: np.ndarray
    threshold: float
    well_separated: tuple
    leaking: tuple


def separation_report(mu, threshold):
    """Gap of each eigenvalue to its nearest neighbour, split by ``threshold``."""
    v = as_profile(mu)
    if v.size < 2:
        raise DomainError("eigenvalue separation needs at least two eigenvalues")
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    gaps = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(gaps, np.inf)
    deltas = gaps.min(axis=1)
    good = tuple(int(j) for j in np.flatnonzero(deltas >= threshold))
    bad = tuple(int(j) for j in np.flatnonzero(deltas < threshold))
    return SeparationReport(deltas, float(threshold), good, bad)
