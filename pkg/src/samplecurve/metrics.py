"""Performance measures evaluated on validation predictions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logit
from scipy.stats import rankdata

from .errors import (
    DegenerateLinearPredictor,
    DimensionMismatch,
    InvalidSpec,
    NonConverged,
    OneClassOnly,
    ZeroVariance,
)
from .models import irls_logistic

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise DimensionMismatch("empty input")
    return a, b


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with ties counted as one half."""
    s, y = _pair(scores, labels)
    pos = y == 1
    n1 = int(pos.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise OneClassOnly("AUC needs both outcome classes")
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def calibration_slope(predicted_probs, labels) -> float:
    p, y = _pair(predicted_probs, labels)
    if np.any((p <= 0) | (p >= 1)):
        raise InvalidSpec("calibration slope needs predictions strictly inside (0, 1)")
    if y.min() == y.max():
        raise OneClassOnly("calibration slope needs both outcome classes")
    eta = logit(p)
    if np.var(eta, ddof=1) < 1e-12:
        raise DegenerateLinearPredictor("linear predictor has no spread")
    fit = irls_logistic(eta[:, None], y)
    if not fit.converged:
        raise NonConverged("calibration refit did not converge")
    return float(fit.coefficients[0])


def mape(predicted, oracle) -> float:
    a, b = _pair(predicted, oracle)
    return float(np.mean(np.abs(a - b)))


def brier(predicted, labels) -> float:
    a, b = _pair(predicted, labels)
    return float(np.mean((a - b) ** 2))


def r_squared(predicted, outcomes) -> float:
    a, y = _pair(predicted, outcomes)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 0:
        raise ZeroVariance("outcomes have zero variance")
    return 1.0 - float(np.sum((y - a) ** 2)) / ss_tot


# A metric function receives (predicted, labels, oracle).
MetricFn = Callable[[np.ndarray, np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class MetricDef:
    kind: str
    fn: MetricFn
    orientation: str
    outcome_types: tuple[str, ...] = ("binary", "continuous")


_METRICS: dict[str, MetricDef] = {}


def register_metric(kind: str, fn: MetricFn, orientation: str,
                    outcome_types: tuple[str, ...] = ("binary", "continuous")) -> None:
    if orientation not in (MAXIMIZE, MINIMIZE):
        raise InvalidSpec(f"orientation must be {MAXIMIZE!r} or {MINIMIZE!r}")
    _METRICS[kind] = MetricDef(kind, fn, orientation, outcome_types)


def metric_def(kind: str) -> MetricDef:
    try:
        return _METRICS[kind]
    except KeyError:
        raise InvalidSpec(f"unknown metric {kind!r}; known: {sorted(_METRICS)}") from None


register_metric("auc", lambda p, y, o: auc(p, y), MAXIMIZE, ("binary",))
register_metric("calibration_slope", lambda p, y, o: calibration_slope(p, y), MAXIMIZE, ("binary",))
register_metric("mape", lambda p, y, o: mape(p, o), MINIMIZE)
register_metric("brier", lambda p, y, o: brier(p, y), MINIMIZE, ("binary",))
register_metric("r_squared", lambda p, y, o: r_squared(p, y), MAXIMIZE, ("continuous",))


@dataclass(frozen=True)
class MetricSpec:
    """A metric together with its acceptable level.

    Give either ``threshold`` (absolute M*) or ``deviation`` d, in which case
    M* is resolved from the large-sample level ``ideal`` as ``ideal - d`` for
    maximised metrics and ``ideal + d`` for minimised ones.
    """

    kind: str
    threshold: float | None = None
    deviation: float | None = None
    ideal: float | None = None
    orientation: str | None = None

    def __post_init__(self) -> None:
        if self.orientation is None:
            object.__setattr__(self, "orientation", metric_def(self.kind).orientation)
        elif self.orientation not in (MAXIMIZE, MINIMIZE):
            raise InvalidSpec(f"bad orientation {self.orientation!r}")
        if self.threshold is None and self.deviation is None:
            raise InvalidSpec(f"metric {self.kind!r} needs a threshold or a deviation")
        if self.deviation is not None and self.deviation < 0:
            raise InvalidSpec("deviation must be nonnegative")

    @property
    def target_mode(self) -> str:
        return "absolute" if self.threshold is not None else "deviation"

    @property
    def resolved(self) -> bool:
        return self.threshold is not None

    def resolve(self, ideal: float) -> "MetricSpec":
        if self.threshold is not None:
            return self
        sign = -1.0 if self.orientation == MAXIMIZE else 1.0
        return MetricSpec(self.kind, ideal + sign * self.deviation, self.deviation, ideal, self.orientation)

    def satisfied(self, value: float) -> bool:
        if self.threshold is None:
            raise InvalidSpec("unresolved threshold")
        if self.orientation == MAXIMIZE:
            return value >= self.threshold
        return value <= self.threshold

    def evaluate(self, predicted, labels, oracle) -> float:
        return float(metric_def(self.kind).fn(predicted, labels, oracle))
