"""Parametric data-generating distribution: definition, tuning and sampling.

Predictors are an equicorrelated standard-normal block.  The first
``n_true`` columns carry signal through ``coefficient_scale * pattern``;
noise columns get a coefficient of exactly zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from . import rng as streams
from .data import Dataset
from .errors import InvalidSpec, NoBracket, TargetUnreachable
from .metrics import auc

INTERCEPT_BOUNDS = (-20.0, 20.0)
SCALE_BOUNDS = (0.0, 50.0)
PREVALENCE_TOL = 0.002
PERFORMANCE_TOL = 0.005
MAX_BISECTIONS = 60
DEFAULT_MC_SIZE = 200_000
DEFAULT_EVAL_SIZE = 1_000_000
_CHUNK = 100_000


@dataclass(frozen=True)
class GeneratorSpec:
    outcome_type: str = "binary"
    n_true: int = 1
    n_noise: int = 0
    predictor_correlation: float = 0.0
    coefficient_pattern: str = "equal"
    decay_ratio: float | None = None
    target_prevalence: float | None = None
    target_performance: float = 0.75

    def __post_init__(self) -> None:
        if self.outcome_type not in ("binary", "continuous"):
            raise InvalidSpec(f"outcome_type must be binary or continuous, got {self.outcome_type!r}")
        if self.n_true < 0 or self.n_noise < 0 or self.n_true + self.n_noise < 1:
            raise InvalidSpec("need at least one predictor and nonnegative counts")
        if not 0.0 <= self.predictor_correlation <= 0.95:
            raise InvalidSpec("predictor_correlation must lie in [0, 0.95]")
        if self.coefficient_pattern == "geometric":
            if self.decay_ratio is None or not 0 < self.decay_ratio <= 1:
                raise InvalidSpec("geometric pattern needs decay_ratio in (0, 1]")
        elif self.coefficient_pattern != "equal":
            raise InvalidSpec(f"unknown coefficient_pattern {self.coefficient_pattern!r}")
        perf = self.target_performance
        if self.outcome_type == "binary":
            if self.target_prevalence is None or not 0.01 < self.target_prevalence < 0.99:
                raise InvalidSpec("target_prevalence must lie in (0.01, 0.99)")
            if not 0.5 <= perf <= 0.999:
                raise InvalidSpec("target AUC must lie in [0.5, 0.999]")
        elif not 0 < perf <= 0.999:
            raise InvalidSpec("target R^2 must lie in (0, 0.999]")
        if perf > self.chance_level and self.n_true < 1:
            raise InvalidSpec("a target above chance needs at least one true predictor")

    @property
    def p(self) -> int:
        return self.n_true + self.n_noise

    @property
    def chance_level(self) -> float:
        return 0.5 if self.outcome_type == "binary" else 0.0

    def pattern(self) -> np.ndarray:
        """Relative weights, normalised so ``x @ pattern`` has unit variance."""
        w = np.zeros(self.p)
        if self.n_true == 0:
            return w
        if self.coefficient_pattern == "equal":
            w[: self.n_true] = 1.0
        else:
            w[: self.n_true] = self.decay_ratio ** np.arange(self.n_true)
        return w / math.sqrt(float(w @ self.correlation_matrix() @ w))

    def correlation_matrix(self) -> np.ndarray:
        rho = self.predictor_correlation
        return (1 - rho) * np.eye(self.p) + rho * np.ones((self.p, self.p))

    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(self.correlation_matrix())


@dataclass(frozen=True)
class TunedGenerator:
    spec: GeneratorSpec
    intercept: float
    coefficient_scale: float
    noise_sd: float | None = None
    achieved_prevalence: float | None = None
    achieved_prevalence_se: float | None = None
    achieved_performance: float | None = None
    achieved_performance_se: float | None = None
    tuning_sample_size: int = 0
    evaluation_sample_size: int = 0
    _chol: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self._chol is None:
            object.__setattr__(self, "_chol", self.spec.cholesky())

    @property
    def coefficients(self) -> np.ndarray:
        return self.coefficient_scale * self.spec.pattern()

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("_chol")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TunedGenerator":
        d = dict(d)
        d["spec"] = GeneratorSpec(**d["spec"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_float)

    @classmethod
    def from_json(cls, text: str) -> "TunedGenerator":
        return cls.from_dict(json.loads(text))


def _json_float(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


def _draw_predictors(chol: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, chol.shape[0]))
    return z @ chol.T


def draw(gen: TunedGenerator, n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` rows from ``gen`` using the given generator."""
    spec = gen.spec
    X = _draw_predictors(gen._chol, n, rng)
    eta = gen.intercept + X @ gen.coefficients
    if spec.outcome_type == "binary":
        prob = expit(eta)
        y = (rng.random(n) < prob).astype(float)
        return Dataset(X, y, prob, "binary")
    y = eta + gen.noise_sd * rng.standard_normal(n)
    return Dataset(X, y, eta, "continuous")


def generate(gen: TunedGenerator, n: int, master_seed: int, stream: int) -> Dataset:
    if n < 0:
        raise InvalidSpec("n must be nonnegative")
    return draw(gen, n, streams.generator(master_seed, stream))


def _bisect_increasing(f, target: float, lo: float, hi: float, tol: float) -> float:
    """Root of a nondecreasing ``f`` at ``target`` on ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if not flo <= target <= fhi:
        raise NoBracket(f"target {target} outside [{flo}, {fhi}] on [{lo}, {hi}]")
    mid = 0.5 * (lo + hi)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm - target) < tol:
            break
        if fm < target:
            lo = mid
        else:
            hi = mid
    return mid


def _intercept_for(scores: np.ndarray, target_prevalence: float) -> float:
    return _bisect_increasing(lambda b0: float(expit(b0 + scores).mean()), target_prevalence,
                              *INTERCEPT_BOUNDS, tol=1e-7)


def tune_intercept(spec: GeneratorSpec, scaled_coefficients, target_prevalence: float,
                   mc_size: int = DEFAULT_MC_SIZE, seed: int = 0) -> float:
    """Intercept giving mean event probability ``target_prevalence``.

    The same predictor draws are reused for every bisection step so the
    objective is a deterministic increasing function of the intercept.
    """
    if spec.outcome_type != "binary":
        raise InvalidSpec("intercept tuning applies to binary outcomes")
    if not 0.01 < target_prevalence < 0.99:
        raise InvalidSpec("target_prevalence must lie in (0.01, 0.99)")
    if mc_size < 100_000:
        raise InvalidSpec("mc_size must be at least 1e5")
    beta = np.asarray(scaled_coefficients, dtype=float)
    if not np.any(beta):
        return float(np.log(target_prevalence / (1 - target_prevalence)))
    X = _draw_predictors(spec.cholesky(), mc_size, streams.stream_generator(seed, "tune", 0, 0))
    return _intercept_for(X @ beta, target_prevalence)


def expected_auc(eta_sorted: np.ndarray) -> float:
    """AUC of the true risk as a scorer, averaged over Bernoulli labels.

    ``eta_sorted`` are linear predictors in ascending order with no ties.
    Ratio of expected concordant pairs to expected event/non-event pairs.
    """
    prob = expit(eta_sorted)
    q = 1.0 - prob
    below = np.cumsum(q) - q  # non-event mass strictly below each row
    concordant = float(prob @ below)
    total = prob.sum() * q.sum() - float(prob @ q)
    return concordant / total


def _hanley_mcneil_se(a: float, n1: int, n0: int) -> float:
    q1 = a / (2 - a)
    q2 = 2 * a * a / (1 + a)
    var = (a * (1 - a) + (n1 - 1) * (q1 - a * a) + (n0 - 1) * (q2 - a * a)) / (n1 * n0)
    return math.sqrt(max(var, 0.0))


def evaluate_generator(gen: TunedGenerator, size: int, seed: int) -> dict:
    """Independent Monte Carlo evaluation of prevalence and tuning metric."""
    spec = gen.spec
    etas, ys = [], []
    for k, start in enumerate(range(0, size, _CHUNK)):
        m = min(_CHUNK, size - start)
        d = draw(gen, m, streams.stream_generator(seed, "tune", 1, k))
        etas.append(d.true_prob)
        ys.append(d.outcomes)
    oracle = np.concatenate(etas)
    y = np.concatenate(ys)
    if spec.outcome_type == "binary":
        n1 = int(y.sum())
        a = auc(oracle, y) if 0 < n1 < size else 0.5
        return {
            "prevalence": float(oracle.mean()),
            "prevalence_se": float(oracle.std(ddof=1) / math.sqrt(size)),
            "performance": a,
            "performance_se": _hanley_mcneil_se(a, n1, size - n1),
        }
    resid = y - oracle
    r2 = 1.0 - float(resid @ resid) / float(np.sum((y - y.mean()) ** 2))
    # delta-method SE of R^2 from the variance ratio
    se = 2 * (1 - r2) * r2 / math.sqrt(size) if 0 < r2 < 1 else 0.0
    return {"prevalence": None, "prevalence_se": None, "performance": r2, "performance_se": se}


def tune_scale(spec: GeneratorSpec, mc_size: int = DEFAULT_MC_SIZE, seed: int = 0,
               eval_size: int = DEFAULT_EVAL_SIZE) -> TunedGenerator:
    """Tune intercept and coefficient scale to the target prevalence and performance.

    Binary outcomes bisect the scale on [0, 50] against the expected AUC of
    the true risk on one fixed draw of ``mc_size`` rows, re-solving the
    intercept at each trial scale.  Continuous outcomes fix the signal
    variance at 1 and solve the noise SD in closed form.  The ``achieved_*``
    fields come from a separate draw of ``eval_size`` rows.
    """
    if mc_size < 100_000:
        raise InvalidSpec("mc_size must be at least 1e5")
    w = spec.pattern()
    chol = spec.cholesky()
    target = spec.target_performance

    if spec.outcome_type == "continuous":
        scale = 1.0
        noise_sd = math.sqrt((1 - target) / target)
        gen = TunedGenerator(spec, 0.0, scale, noise_sd, tuning_sample_size=0, _chol=chol)
    else:
        X = _draw_predictors(chol, mc_size, streams.stream_generator(seed, "tune", 0, 0))
        s = X @ w
        s.sort()
        prev = spec.target_prevalence

        def perf(c: float) -> float:
            if c == 0.0:
                return 0.5
            try:
                b0 = _intercept_for(c * s, prev)
            except NoBracket:
                # prevalence out of reach only once the signal is extreme
                return 1.0
            return expected_auc(b0 + c * s)

        if target <= 0.5:
            scale = 0.0
        else:
            top = perf(SCALE_BOUNDS[1])
            if top < target:
                raise TargetUnreachable(f"AUC at scale {SCALE_BOUNDS[1]} is {top:.4f} < target {target}")
            scale = _bisect_increasing(perf, target, *SCALE_BOUNDS, tol=1e-6)
        intercept = _intercept_for(scale * s, prev) if scale > 0 else float(np.log(prev / (1 - prev)))
        gen = TunedGenerator(spec, intercept, scale, None, tuning_sample_size=mc_size, _chol=chol)

    if eval_size <= 0:
        return gen
    ev = evaluate_generator(gen, eval_size, seed)
    return TunedGenerator(
        spec, gen.intercept, gen.coefficient_scale, gen.noise_sd,
        achieved_prevalence=ev["prevalence"], achieved_prevalence_se=ev["prevalence_se"],
        achieved_performance=ev["performance"], achieved_performance_se=ev["performance_se"],
        tuning_sample_size=gen.tuning_sample_size, evaluation_sample_size=eval_size, _chol=chol,
    )
