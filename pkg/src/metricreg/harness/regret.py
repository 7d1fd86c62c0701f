"""Regret against the true regression function and reference envelopes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import AlignmentError
from ..phased import PhasedOutcome


@dataclass
class RegretTrace:
    learner_loss: np.ndarray
    comparator_loss: np.ndarray
    cum_regret: np.ndarray
    envelope: np.ndarray
    lipschitz: float
    metadata: dict = field(default_factory=dict)

    @property
    def final(self):
        return float(self.cum_regret[-1]) if self.cum_regret.size else 0.0

    def recompute(self):
        return np.cumsum(self.learner_loss - self.comparator_loss)


def _unwrap(outcomes):
    return [o.outcome if isinstance(o, PhasedOutcome) else o for o in outcomes]


def evaluate_regret(outcomes, oracle, stream, metric=None, metadata=None):
    """Per-round regret of a run against ``f0``.

    ``stream`` supplies the instances and labels the outcomes were produced
    on. The envelope ``(1 + L) t ** (rho_t / (1 + rho_t))`` uses the
    Lipschitz constant of ``f0`` in ``metric`` (identity if omitted) and
    is a shape reference only.
    """
    outs = _unwrap(outcomes)
    if len(outs) != len(stream):
        raise AlignmentError(f"{len(outs)} outcomes for a stream of {len(stream)}")
    X = stream.X
    f0 = oracle.f0(X) if callable(getattr(oracle, "f0", None)) else np.asarray(oracle, dtype=float)
    if f0.shape[0] != len(outs):
        raise AlignmentError("comparator values do not match the stream length")
    learner = np.array([o.loss for o in outs])
    comparator = (f0 - stream.y) ** 2
    cum = np.cumsum(learner - comparator)
    L = 0.0
    if metric is not None and hasattr(oracle, "lipschitz_in_metric"):
        L = oracle.lipschitz_in_metric(metric)
    elif hasattr(oracle, "sup_norms"):
        s, _ = oracle.sup_norms(np.eye(X.shape[1]))
        L = float(math.sqrt(np.sum(s**2)))
    t = np.arange(1, len(outs) + 1, dtype=float)
    rho = np.array([o.effective_rank_used for o in outs], dtype=float)
    envelope = (1.0 + L) * t ** (rho / (1.0 + rho))
    return RegretTrace(learner, comparator, cum, envelope, L, dict(metadata or {}))


def loglog_slope(cum_regret, frac=0.1):
    """Least-squares slope of ``ln R_t`` on ``ln t`` over ``t`` in ``[frac T, T]``.

    Rounds with ``R_t <= 0`` are dropped. Returns ``(slope, rms_residual)``;
    both are NaN with fewer than two usable rounds.
    """
    R = np.asarray(cum_regret, dtype=float)
    T = R.size
    t = np.arange(1, T + 1, dtype=float)
    keep = (t >= frac * T) & (R > 0)
    if keep.sum() < 2:
        return float("nan"), float("nan")
    x = np.log(t[keep])
    z = np.log(R[keep])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, z, rcond=None)
    resid = z - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))
