"""Minimum development sample size by adaptive learning-curve search.

Tune the generator, seed the learning curve at five log-spaced sample sizes,
then alternate between evaluating at the current GP crossing estimate and at
the most uncertain point inside its 80% band until the estimates settle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .datagen import DEFAULT_EVAL_SIZE, DEFAULT_MC_SIZE, GeneratorSpec, TunedGenerator, tune_scale
from .errors import InvalidSpec, NoBracket, TargetUnreachable, TooFewPoints, TuningFailed
from .metrics import MAXIMIZE, MetricSpec, metric_def
from .models import ModelStrategy, get_strategy
from .simulate import DEFAULT_VALIDATION_SIZE, PerformanceSummary, draw_validation, run_at_n
from .surrogate import (
    CROSSING_GRID,
    AlreadySatisfied,
    Crossing,
    CurveObservation,
    Unreachable,
    find_crossing,
    fit_power_law,
    gp_fit,
    gp_predict,
)

log = logging.getLogger(__name__)

INITIAL_POINTS = 5


@dataclass(frozen=True)
class SolverConfig:
    generator: GeneratorSpec
    metrics: tuple[MetricSpec, ...]
    strategy_tag: str = "logistic"
    strategy_options: dict = field(default_factory=dict)
    criterion: str = "assurance"
    assurance: float = 0.8
    n_min: int | None = None
    n_max: int = 200_000
    r_search: int = 100
    r_confirm: int = 400
    validation_size: int = DEFAULT_VALIDATION_SIZE
    max_iterations: int = 12
    tolerance: float = 0.02
    master_seed: int = 0
    tuning_mc_size: int = DEFAULT_MC_SIZE
    tuning_eval_size: int = DEFAULT_EVAL_SIZE
    fresh_validation: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.metrics:
            raise InvalidSpec("at least one metric is required")
        if self.criterion not in ("mean", "assurance"):
            raise InvalidSpec(f"criterion must be 'mean' or 'assurance', got {self.criterion!r}")
        if not 0.5 < self.assurance <= 0.99:
            raise InvalidSpec("assurance level must lie in (0.5, 0.99]")
        if self.n_min is None:
            object.__setattr__(self, "n_min", max(50, 2 * (self.generator.p + 1)))
        if not 1 <= self.n_min < self.n_max:
            raise InvalidSpec("need 1 <= n_min < n_max")
        if self.r_search < 20 or self.r_confirm < 2:
            raise InvalidSpec("r_search must be >= 20 and r_confirm >= 2")
        if self.max_iterations < 1 or self.tolerance <= 0:
            raise InvalidSpec("max_iterations must be >= 1 and tolerance > 0")
        for m in self.metrics:
            if self.generator.outcome_type not in metric_def(m.kind).outcome_types:
                raise InvalidSpec(f"metric {m.kind!r} does not apply to {self.generator.outcome_type} outcomes")

    @property
    def q(self) -> float:
        return 1.0 - self.assurance

    def strategy(self) -> ModelStrategy:
        s = get_strategy(self.strategy_tag, **self.strategy_options)
        if s.outcome_type != self.generator.outcome_type:
            raise InvalidSpec(f"strategy {self.strategy_tag!r} fits {s.outcome_type} outcomes")
        return s


@dataclass
class MetricResult:
    metric: MetricSpec
    status: str  # "crossing", "already_satisfied", "unreachable", "insufficient"
    n_required: int | None
    crossing: Crossing | None
    observations: list[CurveObservation]
    gp: dict | None
    power_law: dict | None
    history: list[float | None]
    gp_model: object = field(default=None, repr=False)


@dataclass
class SampleSizeResult:
    criterion: str
    assurance: float | None
    master_seed: int
    generator: TunedGenerator
    metrics: dict[str, MetricResult]
    n_required: int | None
    confirmation: PerformanceSummary | None
    confirmed: bool
    converged: bool
    iterations: int
    total_fits: int
    summaries: dict[int, PerformanceSummary] = field(repr=False)
    baselines: dict = field(default_factory=dict)

    @property
    def flags(self) -> list[str]:
        out = []
        if not self.converged:
            out.append("BudgetExhausted")
        if self.confirmation is not None and not self.confirmed:
            out.append("NotConfirmed")
        if any(m.status == "unreachable" for m in self.metrics.values()):
            out.append("TargetUnreachable")
        return out


def resolve_threshold(metric: MetricSpec, gen: TunedGenerator, validation=None) -> MetricSpec:
    """Turn a deviation-mode metric into an absolute threshold."""
    if metric.resolved:
        return metric
    if metric.ideal is not None:
        return metric.resolve(metric.ideal)
    if metric.kind == "calibration_slope":
        ideal = 1.0
    elif metric.kind in ("auc", "r_squared"):
        ideal = gen.achieved_performance
    elif metric.kind == "mape":
        ideal = 0.0
    elif metric.kind == "brier" and validation is not None:
        p = validation.true_prob
        ideal = float(np.mean(p * (1 - p)))
    else:
        raise InvalidSpec(f"metric {metric.kind!r} in deviation mode needs an explicit ideal value")
    return metric.resolve(ideal)


def initial_design(n_min: int, n_max: int, k: int = INITIAL_POINTS) -> list[int]:
    return sorted({int(round(v)) for v in np.geomspace(n_min, n_max, k)})


def curve_statistic(summary: PerformanceSummary, kind: str, criterion: str) -> tuple[float, float]:
    s = summary.metrics[kind]
    y, se = s.statistic(criterion)
    # a tied lower tail (e.g. failed fits set to the worst value) collapses the
    # bootstrap SE to zero, which the GP would treat as an exact point
    if criterion == "assurance" and math.isfinite(s.mean_se):
        se = max(se, s.mean_se)
    return y, se


def _observations(summaries: dict[int, PerformanceSummary], kind: str, criterion: str) -> list[CurveObservation]:
    out = []
    for n in sorted(summaries):
        y, se = curve_statistic(summaries[n], kind, criterion)
        if math.isfinite(y):
            out.append(CurveObservation(n, y, se if math.isfinite(se) else 0.0))
    return out


def solve_on_curve(observations: list[CurveObservation], metric: MetricSpec, n_min: int, n_max: int):
    """GP fit plus threshold crossing for one metric on fixed observations."""
    model = gp_fit(observations)
    return model, find_crossing(model, metric.threshold, metric.orientation, n_min, n_max)


def _n_required(crossing, n_min: int) -> int | None:
    if isinstance(crossing, Crossing):
        return int(math.ceil(crossing.n_hat - 1e-9))
    if isinstance(crossing, AlreadySatisfied):
        return n_min
    return None


def _gp_diagnostics(model) -> dict:
    return {
        "amplitude": model.amplitude * model.scale,
        "length_scale": model.length_scale,
        "center": model.center,
        "scale": model.scale,
        "jitter": model.jitter,
        "log_marginal_likelihood": model.log_marginal_likelihood,
    }


def _power_law_diagnostics(obs: list[CurveObservation], orientation: str) -> dict | None:
    try:
        fit = fit_power_law(obs, orientation)
    except TooFewPoints:
        return None
    return {"a": fit.sign * fit.a, "b": fit.sign * fit.b, "alpha": fit.alpha, "sse": fit.sse}


def _explore_point(model, crossing: Crossing) -> int:
    lo, hi = crossing.ci_low, crossing.ci_high
    if hi <= lo:
        return int(math.ceil(crossing.n_hat))
    grid = np.geomspace(lo, hi, CROSSING_GRID)
    _, sd = gp_predict(model, grid)
    return int(math.ceil(grid[int(np.argmax(sd))]))


def solve_sample_size(config: SolverConfig, threads: int = 1, progress=None,
                      generator: TunedGenerator | None = None) -> SampleSizeResult:
    """Smallest n whose learning-curve statistic clears every metric threshold.

    ``generator`` may be passed to skip tuning (for instance a cached
    :class:`TunedGenerator`).
    """
    strategy = config.strategy()
    if generator is None:
        log.info("tuning generator")
        try:
            generator = tune_scale(config.generator, config.tuning_mc_size, config.master_seed,
                                   config.tuning_eval_size)
        except (NoBracket, TargetUnreachable) as exc:
            raise TuningFailed(str(exc)) from exc
    validation = None if config.fresh_validation else draw_validation(
        generator, config.validation_size, config.master_seed)
    metrics = [resolve_threshold(m, generator, validation) for m in config.metrics]
    crit, q = config.criterion, config.q
    n_min, n_max = config.n_min, config.n_max

    summaries: dict[int, PerformanceSummary] = {}
    total_fits = 0

    def evaluate(n: int, R: int) -> PerformanceSummary:
        nonlocal total_fits
        s = run_at_n(generator, strategy, metrics, n, R, config.validation_size, config.master_seed,
                     q=q, threads=threads, validation=validation,
                     fresh_validation=config.fresh_validation)
        total_fits += R
        stats = ", ".join(f"{k}={curve_statistic(s, k, crit)[0]:.4f}" for k in s.metrics)
        log.info("n=%d R=%d %s", n, R, stats)
        if progress:
            progress(n, s)
        return s

    for n in initial_design(n_min, n_max):
        summaries[n] = evaluate(n, config.r_search)

    history: dict[str, list] = {m.kind: [] for m in metrics}
    converged = False
    iteration = 0
    state: dict[str, tuple] = {}
    for iteration in range(1, config.max_iterations + 1):
        state = _fit_all(metrics, summaries, crit, n_min, n_max)
        for m in metrics:
            history[m.kind].append(_crossing_n(state[m.kind][1]))
        if _settled(history, config.tolerance, state):
            converged = True
            break
        if iteration == config.max_iterations:
            break
        open_metrics = [(m, state[m.kind]) for m in metrics if isinstance(state[m.kind][1], Crossing)]
        if not open_metrics:
            converged = True
            break
        metric, (model, cross) = max(
            open_metrics,
            key=lambda t: (math.log(t[1][1].ci_high / t[1][1].ci_low), t[1][1].n_hat))
        exploit = int(math.ceil(cross.n_hat))
        explore = _explore_point(model, cross)
        order = (exploit, explore) if iteration % 2 == 1 else (explore, exploit)
        nxt = next((n for n in order if n not in summaries), None)
        if nxt is None:
            continue
        nxt = min(max(nxt, n_min), n_max)
        summaries[nxt] = evaluate(nxt, config.r_search)

    if not converged:
        log.warning("search budget exhausted after %d iterations", iteration)

    results: dict[str, MetricResult] = {}
    for m in metrics:
        model, cross = state[m.kind]
        obs = _observations(summaries, m.kind, crit)
        status = {Crossing: "crossing", AlreadySatisfied: "already_satisfied",
                  Unreachable: "unreachable"}.get(type(cross), "insufficient")
        results[m.kind] = MetricResult(
            metric=m, status=status, n_required=_n_required(cross, n_min),
            crossing=cross if isinstance(cross, Crossing) else None,
            observations=obs,
            gp=_gp_diagnostics(model) if model is not None else None,
            power_law=_power_law_diagnostics(obs, m.orientation),
            history=history[m.kind],
            gp_model=model,
        )

    required = [r.n_required for r in results.values() if r.n_required is not None]
    combined = max(required) if required else None

    confirmation, confirmed = None, True
    if combined is not None:
        confirmation = evaluate(combined, config.r_confirm)
        for m in metrics:
            if results[m.kind].n_required is None:
                continue
            y, se = curve_statistic(confirmation, m.kind, crit)
            se = se if math.isfinite(se) else 0.0
            if not math.isfinite(y):
                confirmed = False
            elif m.orientation == MAXIMIZE and y < m.threshold - se:
                confirmed = False
            elif m.orientation != MAXIMIZE and y > m.threshold + se:
                confirmed = False

    return SampleSizeResult(
        criterion=crit,
        assurance=config.assurance if crit == "assurance" else None,
        master_seed=config.master_seed,
        generator=generator,
        metrics=results,
        n_required=combined,
        confirmation=confirmation,
        confirmed=confirmed,
        converged=converged,
        iterations=iteration,
        total_fits=total_fits,
        summaries=summaries,
    )


def _crossing_n(cross) -> float | None:
    return cross.n_hat if isinstance(cross, Crossing) else None


def _fit_all(metrics, summaries, crit, n_min, n_max) -> dict[str, tuple]:
    state = {}
    for m in metrics:
        obs = _observations(summaries, m.kind, crit)
        try:
            state[m.kind] = solve_on_curve(obs, m, n_min, n_max)
        except TooFewPoints:
            state[m.kind] = (None, None)
    return state


def _settled(history: dict[str, list], tol: float, state: dict) -> bool:
    for kind, h in history.items():
        cross = state[kind][1]
        if isinstance(cross, (AlreadySatisfied, Unreachable)):
            continue
        if cross is None or len(h) < 2 or h[-2] is None:
            return False
        if abs(h[-1] - h[-2]) >= tol * h[-2]:
            return False
    return True


def check_reachability(gen: TunedGenerator, strategy: ModelStrategy, metric: MetricSpec,
                       n_max: int, R: int, seed: int, criterion: str = "assurance",
                       assurance: float = 0.8, validation_size: int = DEFAULT_VALIDATION_SIZE,
                       threads: int = 1) -> tuple[bool, float, float]:
    """Whether the metric statistic at ``n_max`` can clear its threshold.

    Returns ``(reachable, ceiling, se)``; reachable iff the statistic plus
    two standard errors reaches the threshold.
    """
    metric = resolve_threshold(metric, gen)
    s = run_at_n(gen, strategy, [metric], n_max, R, validation_size, seed, q=1 - assurance,
                 threads=threads)
    y, se = curve_statistic(s, metric.kind, criterion)
    se = se if math.isfinite(se) else 0.0
    if not math.isfinite(y):
        return False, y, se
    if metric.orientation == MAXIMIZE:
        return y + 2 * se >= metric.threshold, y, se
    return y - 2 * se <= metric.threshold, y, se
