"""Distribution of validated performance over development draws at one n."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as streams
from .data import Dataset
from .datagen import TunedGenerator, generate
from .errors import EmptyInput, InvalidSpec, SampleCurveError, TooFewValues, ValidationDegenerate
from .metrics import MAXIMIZE, MetricSpec
from .models import ModelStrategy

log = logging.getLogger(__name__)

DEFAULT_VALIDATION_SIZE = 200_000
DEFAULT_BOOTSTRAP = 200


def empirical_quantile(values, q: float) -> float:
    """Quantile by linear interpolation between order statistics.

    With sorted values v(1..R) and h = (R - 1) q + 1 the result is
    v(floor h) + (h - floor h) (v(ceil h) - v(floor h)).
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise EmptyInput("quantile of an empty sequence")
    if not 0.0 <= q <= 1.0:
        raise InvalidSpec("q must lie in [0, 1]")
    h = (v.size - 1) * q
    lo = math.floor(h)
    hi = math.ceil(h)
    return float(v[lo] + (h - lo) * (v[hi] - v[lo]))


def quantile_se(values, q: float, B: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> float:
    """Bootstrap standard deviation of :func:`empirical_quantile`."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 5:
        raise TooFewValues("quantile SE needs at least 5 values")
    if B < 100:
        raise InvalidSpec("B must be at least 100")
    gen = streams.generator(seed, 0)
    R = v.size
    resamples = np.sort(v[gen.integers(0, R, size=(B, R))], axis=1)
    h = (R - 1) * q
    lo, hi = math.floor(h), math.ceil(h)
    est = resamples[:, lo] + (h - lo) * (resamples[:, hi] - resamples[:, lo])
    return float(est.std(ddof=1))


@dataclass(frozen=True)
class PerformanceSample:
    n: int
    replicate: int
    values: dict[str, float]
    model_converged: bool


@dataclass(frozen=True)
class MetricSummary:
    kind: str
    orientation: str
    mean: float
    sd: float
    mean_se: float
    quantile: float
    quantile_se: float
    failures: int
    successes: int
    q: float
    values: np.ndarray = field(repr=False, compare=False)

    def statistic(self, criterion: str) -> tuple[float, float]:
        """Per-n curve value and its SE under ``criterion`` ('mean' or 'assurance')."""
        if criterion == "mean":
            return self.mean, self.mean_se
        return self.quantile, self.quantile_se


@dataclass(frozen=True)
class PerformanceSummary:
    n: int
    R: int
    q: float
    metrics: dict[str, MetricSummary]
    samples: tuple[PerformanceSample, ...] = field(repr=False, compare=False)


def failure_adjusted(values: np.ndarray, orientation: str) -> np.ndarray:
    """Replace failed replicates (NaN) by the worst successful value.

    Failed fits can never clear the threshold, so for quantiles they sit at
    the unfavourable end of the distribution.
    """
    ok = ~np.isnan(values)
    if ok.all() or not ok.any():
        return values
    worst = values[ok].min() if orientation == MAXIMIZE else values[ok].max()
    out = values.copy()
    out[~ok] = worst
    return out


def summarize(kind: str, orientation: str, values: np.ndarray, q: float,
              B: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> MetricSummary:
    values = np.asarray(values, dtype=float)
    ok = values[~np.isnan(values)]
    m = ok.size
    failures = values.size - m
    if m == 0:
        nan = float("nan")
        return MetricSummary(kind, orientation, nan, nan, nan, nan, nan, failures, 0, q, values)
    mean = float(ok.mean())
    sd = float(ok.std(ddof=1)) if m > 1 else 0.0
    # quantile over all replicates, failures counted as worst outcomes; the
    # q-quantile of a maximised metric is its (1 - delta) lower quantile
    adjusted = failure_adjusted(values, orientation)
    level = q if orientation == MAXIMIZE else 1.0 - q
    quant = empirical_quantile(adjusted, level)
    qse = quantile_se(adjusted, level, B, seed) if adjusted.size >= 5 else float("nan")
    return MetricSummary(kind, orientation, mean, sd, sd / math.sqrt(m), quant, qse,
                         failures, m, q, values)


def _one_replicate(gen: TunedGenerator, strategy: ModelStrategy, metrics: list[MetricSpec],
                   n: int, r: int, validation: Dataset | None, validation_size: int,
                   master_seed: int) -> PerformanceSample:
    dev = generate(gen, n, master_seed, streams.stream_id("dev", n, r))
    val = validation
    if val is None:
        val = draw_validation(gen, validation_size, master_seed, n, r)
    failed = dict.fromkeys((m.kind for m in metrics), float("nan"))
    try:
        seed = None if strategy.deterministic else streams.derived_seed(master_seed, "fit", n, r)
        model = strategy.fit(dev, seed=seed)
    except (SampleCurveError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.debug("n=%d r=%d fit failed: %s", n, r, exc)
        return PerformanceSample(n, r, failed, False)
    if not model.converged:
        return PerformanceSample(n, r, failed, False)
    pred = strategy.predict(model, val.predictors)
    values = {}
    for spec in metrics:
        try:
            values[spec.kind] = spec.evaluate(pred, val.outcomes, val.true_prob)
        except (SampleCurveError, np.linalg.LinAlgError, FloatingPointError) as exc:
            log.debug("n=%d r=%d metric %s failed: %s", n, r, spec.kind, exc)
            values[spec.kind] = float("nan")
    return PerformanceSample(n, r, values, True)


def draw_validation(gen: TunedGenerator, size: int, master_seed: int,
                    n: int = 0, replicate: int = 0) -> Dataset:
    val = generate(gen, size, master_seed, streams.stream_id("val", n, replicate))
    if gen.spec.outcome_type == "binary":
        events = val.outcomes.sum()
        if events == 0 or events == val.n:
            raise ValidationDegenerate("validation draw contains a single outcome class")
    return val


def run_at_n(gen: TunedGenerator, strategy: ModelStrategy, metrics: list[MetricSpec], n: int,
             R: int, validation_size: int = DEFAULT_VALIDATION_SIZE, master_seed: int = 0,
             q: float = 0.2, threads: int = 1, validation: Dataset | None = None,
             fresh_validation: bool = False, bootstrap: int = DEFAULT_BOOTSTRAP) -> PerformanceSummary:
    """Fit ``R`` models on independent development draws of size ``n``.

    Every replicate is scored on one shared validation draw (stream
    ``("val", 0, 0)``) unless ``fresh_validation`` is set, in which case each
    replicate gets its own.  Replicate ``r`` always uses stream
    ``("dev", n, r)``, so results do not depend on ``threads``.
    """
    if R < 2:
        raise InvalidSpec("R must be at least 2")
    if n < 1:
        raise InvalidSpec("n must be positive")
    if not metrics:
        raise InvalidSpec("no metrics configured")
    if fresh_validation:
        validation = None
    elif validation is None:
        validation = draw_validation(gen, validation_size, master_seed)

    def task(r: int) -> PerformanceSample:
        return _one_replicate(gen, strategy, metrics, n, r, validation, validation_size, master_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = tuple(pool.map(task, range(R)))
    else:
        samples = tuple(task(r) for r in range(R))

    summaries = {}
    for spec in metrics:
        vals = np.array([s.values[spec.kind] for s in samples])
        seed = streams.derived_seed(master_seed, "bootstrap", n, spec.kind)
        summaries[spec.kind] = summarize(spec.kind, spec.orientation, vals, q, bootstrap, seed)
    return PerformanceSummary(n, R, q, summaries, samples)
