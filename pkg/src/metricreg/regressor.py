"""Online nonparametric regression on an ellipsoid packing (fixed metric).

Each round the learner predicts with the running label mean of the center
nearest to ``x_t`` in the Mahalanobis metric. If ``x_t`` lies farther than
the current radius ``t ** (-1 / (1 + rho_t))`` from that center, ``x_t``
becomes a new center whose label list starts with ``y_t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .effective_rank import RankTracker
from .errors import DimensionError, EmptyStore, InvalidExample
from .linalg import Metric

BALL_TOL = 1e-9


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: float


def check_example(x, y, d=None):
    """Return ``(x, y)`` as (float array, float) or raise :class:`InvalidExample`."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (d is not None and x.shape[0] != d):
        raise InvalidExample(f"instance has shape {x.shape}, expected ({d},)")
    y = float(y)
    if not (np.all(np.isfinite(x)) and math.isfinite(y)):
        raise InvalidExample("instance or label is not finite")
    if float(x @ x) > (1.0 + BALL_TOL) ** 2:
        raise InvalidExample(f"instance norm {np.linalg.norm(x):.6g} exceeds 1")
    if not 0.0 <= y <= 1.0:
        raise InvalidExample(f"label {y!r} outside [0, 1]")
    return x, y


@dataclass
class Dataset:
    """Instances ``X`` (n, d) and labels ``y`` (n,); iterates as examples."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise DimensionError(f"{self.X.shape[0]} instances but {self.y.shape[0]} labels")

    def __len__(self):
        return self.y.shape[0]

    def __iter__(self) -> Iterator[LabeledExample]:
        for x, y in zip(self.X, self.y):
            yield LabeledExample(x, float(y))

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Dataset(self.X[idx], self.y[idx])
        return LabeledExample(self.X[idx], float(self.y[idx]))

    @property
    def dim(self):
        return self.X.shape[1]

    @classmethod
    def from_examples(cls, examples: Iterable[LabeledExample], d=None):
        examples = list(examples)
        if not examples:
            return cls(np.zeros((0, d or 0)), np.zeros(0))
        return cls(np.array([e.x for e in examples]), np.array([e.y for e in examples]))


@dataclass(frozen=True)
class Center:
    anchor: np.ndarray
    label_sum: float
    count: int
    created_at: int


@dataclass(frozen=True)
class StepOutcome:
    t: int
    y: float
    prediction: float
    loss: float
    assigned_center: int
    predicted_by: int
    new_center_created: bool
    radius_used: float
    effective_rank_used: int
    distance: float


class OnlineRegressor:
    """State of the ellipsoid-packing regressor under a fixed :class:`Metric`.

    Parameters
    ----------
    metric : Metric
        Unit-spectral-radius metric used for all distances.
    clock_offset : int
        Added to the local round index when computing the radius; 0 runs
        the algorithm on its own clock.

    Notes
    -----
    ``step`` mutates the state and is not thread-safe; callers serialize.
    """

    def __init__(self, metric: Metric, clock_offset=0):
        self.metric = metric
        self.d = metric.dim
        self.clock_offset = int(clock_offset)
        self.round = 0
        self._ranks = RankTracker(metric.eigenvalues)
        self._L = metric.transform
        cap = 64
        self._anchors = np.empty((cap, self.d))
        self._mapped = np.empty((cap, self.d))
        self._sums = np.zeros(cap)
        self._counts = np.zeros(cap, dtype=np.int64)
        self._created = np.zeros(cap, dtype=np.int64)
        self._radius_at_creation = np.zeros(cap)
        self.n_centers = 0

    @property
    def profile(self):
        return self.metric.eigenvalues

    @property
    def centers(self):
        return [
            Center(self._anchors[i].copy(), float(self._sums[i]), int(self._counts[i]),
                   int(self._created[i]))
            for i in range(self.n_centers)
        ]

    @property
    def anchors(self):
        return self._anchors[: self.n_centers].copy()

    @property
    def creation_radii(self):
        return self._radius_at_creation[: self.n_centers].copy()

    def radius(self, t):
        return radius_for(self._ranks, t + self.clock_offset)

    def nearest_center(self, x):
        """Index and M-distance of the nearest center; lowest index wins ties."""
        if self.n_centers == 0:
            raise EmptyStore("no centers yet")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionError(f"point of shape {x.shape} for dimension {self.d}")
        diff = self._mapped[: self.n_centers] - self._L @ x
        d2 = np.einsum("ij,ij->i", diff, diff)
        s = int(np.argmin(d2))
        return s, math.sqrt(d2[s])

    def _add_center(self, x, t, radius):
        n = self.n_centers
        if n == self._anchors.shape[0]:
            grow = lambda a: np.concatenate([a, np.zeros_like(a)])  # noqa: E731
            self._anchors = grow(self._anchors)
            self._mapped = grow(self._mapped)
            self._sums = grow(self._sums)
            self._counts = grow(self._counts)
            self._created = grow(self._created)
            self._radius_at_creation = grow(self._radius_at_creation)
        self._anchors[n] = x
        self._mapped[n] = self._L @ x
        self._sums[n] = 0.0
        self._counts[n] = 0
        self._created[n] = t
        self._radius_at_creation[n] = radius
        self.n_centers = n + 1
        return n

    def predict(self, x):
        """Prediction for ``x`` without observing a label (1/2 if nothing is stored)."""
        if self.n_centers == 0:
            return 0.5
        s, _ = self.nearest_center(np.asarray(x, dtype=float))
        return self._sums[s] / self._counts[s] if self._counts[s] else 0.5

    def step(self, x, y) -> StepOutcome:
        x, y = check_example(x, y, self.d)
        t = self.round + 1
        t_clock = t + self.clock_offset
        rho = self._ranks.rho(t_clock)
        eps = t_clock ** (-1.0 / (1 + rho))
        created = False
        if self.n_centers == 0:
            s = self._add_center(x, t, eps)
            dist = 0.0
            created = True
        else:
            s, dist = self.nearest_center(x)
        count = self._counts[s]
        prediction = float(self._sums[s] / count) if count else 0.5
        # label is used only below this line
        loss = (prediction - y) ** 2
        if dist <= eps:
            target = s
        else:
            target = self._add_center(x, t, eps)
            created = True
        self._sums[target] += y
        self._counts[target] += 1
        self.round = t
        return StepOutcome(t, y, prediction, loss, target, s, created, eps, rho, dist)


def radius_for(ranks, t):
    return t ** (-1.0 / (1 + ranks.rho(t)))


def radius(profile, t):
    """``t ** (-1 / (1 + rho_t))`` for a normalized eigenvalue profile."""
    return radius_for(RankTracker(profile), t)


def _as_pairs(stream):
    if isinstance(stream, Dataset):
        return zip(stream.X, stream.y)
    return ((e.x, e.y) for e in stream)


def run_sequence(metric: Metric, stream, clock_offset=0, regressor=None):
    """Run the regressor from a fresh state over ``stream``.

    Returns the list of :class:`StepOutcome`. Errors are re-raised as
    :class:`InvalidExample` carrying the offending (1-based) round.
    """
    reg = regressor if regressor is not None else OnlineRegressor(metric, clock_offset)
    out = []
    for i, (x, y) in enumerate(_as_pairs(stream), start=1):
        try:
            out.append(reg.step(x, y))
        except InvalidExample as exc:
            raise InvalidExample(f"round {i}: {exc}", round_index=i) from exc
    return out


OUTCOME_COLUMNS = ["t", "y", "prediction", "loss", "cum_loss", "n_centers", "rho_t",
                   "epsilon_t", "new_center"]


def outcome_rows(outcomes, extra=None):
    """Rows for the online-run CSV: one dict per round, with running totals.

    ``extra`` maps column name to a per-round sequence appended to each row.
    """
    rows = []
    cum = 0.0
    n_centers = 0
    for k, o in enumerate(outcomes):
        cum += o.loss
        if o.new_center_created:
            n_centers += 1
        if o.t == 1:
            n_centers = 1
        row = {
            "t": o.t, "y": o.y, "prediction": o.prediction, "loss": o.loss,
            "cum_loss": cum, "n_centers": n_centers, "rho_t": o.effective_rank_used,
            "epsilon_t": o.radius_used, "new_center": int(o.new_center_created),
        }
        if extra:
            for key, values in extra.items():
                row[key] = values[k]
        rows.append(row)
    return rows
