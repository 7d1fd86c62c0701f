"""Phased learner that re-estimates the metric at doubling phase boundaries.

Phase ``i`` (1-based) has ``2**i`` rounds and ends at global round
``2**(i+1) - 2``. Each phase restarts the ellipsoid-packing regressor under
the metric built from the gradient outer product estimated at the end of
the previous phase, regularized by ``t ** -alpha`` and scaled to unit
spectral radius. The first phase runs under the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .effective_rank import effective_rank
from .errors import InvalidExample
from .gop import BandwidthSchedule, GopEstimate, estimate_gop
from .linalg import Metric, eig_sym, spectral_normalize
from .regressor import Dataset, OnlineRegressor


def phase_length(i):
    return 2**i


def phase_end(i):
    """Global index of the last round of phase ``i``."""
    return 2 ** (i + 1) - 2


def phase_of_round(t):
    """Phase containing global round ``t`` (1-based)."""
    if t < 1:
        raise ValueError("rounds start at 1")
    return (t + 1).bit_length() - 1


@dataclass(frozen=True)
class RegularizationSchedule:
    """``gamma_bar_0 = 1`` and ``gamma_bar_t = t ** -alpha``."""

    alpha: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def __call__(self, t):
        return 1.0 if t == 0 else float(t) ** (-self.alpha)


def build_metric(gop, gamma_bar):
    """Normalized ``G_hat + gamma_bar I``."""
    G = gop.matrix if isinstance(gop, GopEstimate) else np.asarray(gop, dtype=float)
    if not gamma_bar > 0:
        raise ValueError("gamma_bar must be positive")
    return spectral_normalize(G + gamma_bar * np.eye(G.shape[0]))


@dataclass
class PhaseDiagnostics:
    phase: int
    start: int
    end: int
    complete: bool
    metric_eigenvalues: np.ndarray
    gamma_bar: Optional[float]
    raw_eigenvalues: Optional[np.ndarray]
    next_metric_eigenvalues: Optional[np.ndarray]
    rho_hat: Optional[int]
    rho_last: int
    n_centers: int
    cum_loss: float
    regret: Optional[float]
    gop: Optional[GopEstimate]
    next_metric: Optional[Metric] = None

    def to_dict(self):
        g = self.gop
        return {
            "phase": self.phase,
            "start": self.start,
            "end": self.end,
            "complete": self.complete,
            "metric_eigenvalues": [float(v) for v in self.metric_eigenvalues],
            "gamma_bar": self.gamma_bar,
            "M_hat_eigenvalues": None if self.raw_eigenvalues is None
            else [float(v) for v in self.raw_eigenvalues],
            "next_metric_eigenvalues": None if self.next_metric_eigenvalues is None
            else [float(v) for v in self.next_metric_eigenvalues],
            "rho_hat": self.rho_hat,
            "rho_last": self.rho_last,
            "n_centers": self.n_centers,
            "cum_loss": self.cum_loss,
            "regret": self.regret,
            "gop_eps": None if g is None else g.eps,
            "gop_tau": None if g is None else g.tau,
            "gop_mask_rate": None if g is None else g.mask_rate,
        }


@dataclass(frozen=True)
class PhasedOutcome:
    """A regressor outcome tagged with its phase and global round."""

    phase: int
    global_t: int
    outcome: object


def run_phased(stream, reg=None, sched=None, comparator=None, clock="phase",
               history="cumulative"):
    """Run the phased metric-learning regressor over ``stream``.

    Parameters
    ----------
    stream : Dataset or iterable of LabeledExample
    reg : RegularizationSchedule
    sched : BandwidthSchedule
    comparator : array_like, optional
        ``f0(x_t)`` per round; enables per-phase regret.
    clock : {"phase", "global"}
        Whether the radius inside a phase uses the local or global round.
    history : {"cumulative", "phase"}
        Data used for the phase-end estimate: everything seen so far, or
        only the phase just finished.

    Returns
    -------
    outcomes : list of PhasedOutcome
    diagnostics : list of PhaseDiagnostics
    """
    if clock not in ("phase", "global"):
        raise ValueError(f"unknown clock {clock!r}")
    if history not in ("cumulative", "phase"):
        raise ValueError(f"unknown history mode {history!r}")
    reg = reg or RegularizationSchedule()
    sched = sched or BandwidthSchedule()
    data = stream if isinstance(stream, Dataset) else Dataset.from_examples(stream)
    T = len(data)
    comp = None if comparator is None else np.asarray(comparator, dtype=float)
    outcomes, diags = [], []
    if T == 0:
        return outcomes, diags
    d = data.dim
    metric = build_metric(np.zeros((d, d)), reg(0))
    i = 1
    start = 1
    while start <= T:
        end_full = phase_end(i)
        end = min(end_full, T)
        offset = start - 1 if clock == "global" else 0
        inner = OnlineRegressor(metric, clock_offset=offset)
        cum = 0.0
        regret = 0.0 if comp is not None else None
        last = None
        for g in range(start, end + 1):
            try:
                o = inner.step(data.X[g - 1], data.y[g - 1])
            except InvalidExample as exc:
                raise InvalidExample(f"phase {i}, round {g}: {exc}", round_index=g,
                                     phase=i) from exc
            outcomes.append(PhasedOutcome(i, g, o))
            cum += o.loss
            if comp is not None:
                regret += o.loss - (comp[g - 1] - o.y) ** 2
            last = o
        complete = end == end_full
        gop = gamma = raw = nxt_vals = rho_hat = nxt = None
        if complete and end < T:
            lo = 0 if history == "cumulative" else start - 1
            gop = estimate_gop(data[lo:end], sched)
            gamma = reg(end)
            nxt = build_metric(gop, gamma)
            raw = eig_sym(gop.matrix + gamma * np.eye(d)).eigenvalues
            nxt_vals = nxt.eigenvalues
            rho_hat = effective_rank(nxt_vals, end)
        diags.append(PhaseDiagnostics(
            phase=i, start=start, end=end, complete=complete,
            metric_eigenvalues=metric.eigenvalues, gamma_bar=gamma,
            raw_eigenvalues=raw, next_metric_eigenvalues=nxt_vals, rho_hat=rho_hat,
            rho_last=last.effective_rank_used, n_centers=inner.n_centers,
            cum_loss=cum, regret=regret, gop=gop, next_metric=nxt,
        ))
        if nxt is not None:
            metric = nxt
        start = end + 1
        i += 1
    return outcomes, diags
