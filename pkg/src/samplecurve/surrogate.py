"""Learning-curve surrogates: a Gaussian process in log n and an inverse power law.

The GP regresses per-n summary statistics (a quantile or a mean) with their
standard errors as heteroscedastic noise.  Inputs are x = ln n, outputs are
standardised, and the kernel is squared-exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .errors import NotPositiveDefinite, TooFewPoints
from .metrics import MAXIMIZE

GRID_SIZE = 20
REFINE_STEPS = 10
NOISE_FLOOR = 1e-6
MAX_JITTER = 1e-6
CROSSING_GRID = 200
BAND_Z = 1.28


@dataclass(frozen=True)
class CurveObservation:
    n: int
    y: float
    se: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.se >= 0:
            raise ValueError("se must be nonnegative")


@dataclass(frozen=True)
class LearningCurveModel:
    observations: tuple[CurveObservation, ...]
    x: np.ndarray
    center: float
    scale: float
    amplitude: float  # sigma_f, standardised units
    length_scale: float
    noise: np.ndarray  # per-point noise variance, standardised units
    jitter: float
    log_marginal_likelihood: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    grid_scores: np.ndarray = field(repr=False, compare=False, default=None)

    def predict(self, n) -> tuple[np.ndarray, np.ndarray]:
        return gp_predict(self, n)


def _kernel(xa: np.ndarray, xb: np.ndarray, amp: float, ell: float) -> np.ndarray:
    d = xa[:, None] - xb[None, :]
    return amp * amp * np.exp(-0.5 * (d / ell) ** 2)


def _factor(x, y, noise, amp, ell):
    K = _kernel(x, x, amp, ell)
    base = K + np.diag(noise)
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(base + jitter * np.eye(x.size))
            return L, jitter
        except np.linalg.LinAlgError:
            jitter = 1e-14 if jitter == 0.0 else jitter * 10
            if jitter > MAX_JITTER:
                raise NotPositiveDefinite("kernel matrix not positive definite after max jitter") from None


def _log_marginal(x, y, noise, amp, ell) -> float:
    try:
        L, _ = _factor(x, y, noise, amp, ell)
    except NotPositiveDefinite:
        return -math.inf
    a = linalg.cho_solve((L, True), y)
    return float(-0.5 * y @ a - np.log(np.diag(L)).sum() - 0.5 * y.size * math.log(2 * math.pi))


def gp_fit(observations) -> LearningCurveModel:
    """Fit the GP by maximising the log marginal likelihood.

    Amplitude is searched over [0.1, 3] (in standardised units) and the
    length-scale over [0.05, 2] times the span of ln n, on a 20 x 20 log grid
    followed by a coordinate-wise halving refinement.
    """
    obs = tuple(sorted(observations, key=lambda o: o.n))
    if len(obs) < 2 or len({o.n for o in obs}) < 2:
        raise TooFewPoints("GP needs at least two distinct n")
    exact: dict[int, float] = {}
    for o in obs:
        if o.se == 0:
            if o.n in exact and exact[o.n] != o.y:
                raise NotPositiveDefinite(f"noiseless observations disagree at n={o.n}")
            exact[o.n] = o.y
    x = np.log(np.array([o.n for o in obs], dtype=float))
    y_raw = np.array([o.y for o in obs], dtype=float)
    se = np.array([o.se for o in obs], dtype=float)

    center = float(y_raw.mean())
    spread = float(y_raw.std(ddof=1))
    scale = spread if spread > 0 else 1.0
    y = (y_raw - center) / scale
    # zero-se points stay noiseless (jitter only) so they are interpolated
    noise = np.where(se > 0, np.maximum((se / scale) ** 2, NOISE_FLOOR), 0.0)

    span = float(x.max() - x.min())
    log_amp = np.linspace(math.log(0.1), math.log(3.0), GRID_SIZE)
    log_ell = np.linspace(math.log(0.05 * span), math.log(2.0 * span), GRID_SIZE)
    scores = np.array([[_log_marginal(x, y, noise, math.exp(a), math.exp(l)) for l in log_ell]
                       for a in log_amp])
    i, j = np.unravel_index(int(np.argmax(scores)), scores.shape)
    best = (float(log_amp[i]), float(log_ell[j]))
    best_score = float(scores[i, j])

    steps = [log_amp[1] - log_amp[0], log_ell[1] - log_ell[0]]
    bounds = [(log_amp[0], log_amp[-1]), (log_ell[0], log_ell[-1])]
    for _ in range(REFINE_STEPS):
        for k in (0, 1):
            for sign in (-1.0, 1.0):
                cand = list(best)
                cand[k] = min(max(cand[k] + sign * steps[k], bounds[k][0]), bounds[k][1])
                s = _log_marginal(x, y, noise, math.exp(cand[0]), math.exp(cand[1]))
                if s > best_score:
                    best, best_score = (cand[0], cand[1]), s
        steps = [st / 2 for st in steps]

    amp, ell = math.exp(best[0]), math.exp(best[1])
    L, jitter = _factor(x, y, noise, amp, ell)
    alpha = linalg.cho_solve((L, True), y)
    # iterative refinement: long length-scales leave the system ill-conditioned
    system = _kernel(x, x, amp, ell) + np.diag(noise + jitter)
    for _ in range(2):
        alpha = alpha + linalg.cho_solve((L, True), y - system @ alpha)
    return LearningCurveModel(obs, x, center, scale, amp, ell, noise, jitter, best_score,
                              L, alpha, scores)


def gp_predict(model: LearningCurveModel, n) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and SD of the latent curve at ``n`` (scalar or array)."""
    scalar = np.ndim(n) == 0
    xs = np.log(np.atleast_1d(np.asarray(n, dtype=float)))
    ks = _kernel(xs, model.x, model.amplitude, model.length_scale)
    mean = ks @ model.alpha
    v = linalg.solve_triangular(model.chol, ks.T, lower=True)
    var = np.maximum(model.amplitude ** 2 - np.sum(v * v, axis=0), 0.0)
    mean = model.center + model.scale * mean
    sd = model.scale * np.sqrt(var)
    if scalar:
        return float(mean[0]), float(sd[0])
    return mean, sd


@dataclass(frozen=True)
class PowerLawFit:
    """y(n) = a - b n^(-alpha)."""

    a: float
    b: float
    alpha: float
    sse: float
    sign: float = 1.0

    def __call__(self, n):
        return self.sign * (self.a - self.b * np.power(np.asarray(n, dtype=float), -self.alpha))


def _power_law_sse(alpha: float, n: np.ndarray, y: np.ndarray):
    A = np.column_stack([np.ones_like(n), -np.power(n, -alpha)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(r @ r), coef


def fit_power_law(observations, orientation: str = MAXIMIZE) -> PowerLawFit:
    """Least-squares inverse power law.

    Grid over alpha in [0.05, 2] (50 log-spaced values) with (a, b) solved
    linearly at each alpha, then a bounded 1-d polish between the grid
    neighbours of the best value.  Minimised metrics are fitted on -y.
    """
    obs = sorted(observations, key=lambda o: o.n)
    if len(obs) < 4 or len({o.n for o in obs}) < 4:
        raise TooFewPoints("power-law fit needs at least 4 distinct n")
    sign = 1.0 if orientation == MAXIMIZE else -1.0
    n = np.array([o.n for o in obs], dtype=float)
    y = sign * np.array([o.y for o in obs], dtype=float)
    grid = np.geomspace(0.05, 2.0, 50)
    sses = [_power_law_sse(a, n, y)[0] for a in grid]
    k = int(np.argmin(sses))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    alpha = float(grid[k])
    res = minimize_scalar(lambda a: _power_law_sse(a, n, y)[0], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-8})
    if res.success and res.fun < sses[k]:
        alpha = float(res.x)
    sse, (a, b) = _power_law_sse(alpha, n, y)
    return PowerLawFit(float(a), float(b), alpha, sse, sign)


@dataclass(frozen=True)
class Crossing:
    n_hat: float
    ci_low: float
    ci_high: float
    monotone: bool = True


@dataclass(frozen=True)
class AlreadySatisfied:
    n_min: int


@dataclass(frozen=True)
class Unreachable:
    mean_at_max: float
    sd_at_max: float


def _first_crossing(f, grid: np.ndarray, threshold: float) -> float | None:
    """Smallest n on ``grid`` with f(n) >= threshold, refined by bisection."""
    vals = f(grid)
    hits = np.nonzero(vals >= threshold)[0]
    if hits.size == 0:
        return None
    k = int(hits[0])
    if k == 0:
        return float(grid[0])
    lo, hi = float(grid[k - 1]), float(grid[k])
    while (hi - lo) > 1e-3 * hi:
        mid = math.sqrt(lo * hi)
        if f(np.array([mid]))[0] >= threshold:
            hi = mid
        else:
            lo = mid
    return hi


def find_crossing(model: LearningCurveModel, threshold: float, orientation: str = MAXIMIZE,
                  n_min: int = 1, n_max: int = 10**6):
    """Where the posterior mean first reaches ``threshold`` on [n_min, n_max].

    Returns :class:`Crossing` (with the 80% band crossings as an interval),
    :class:`AlreadySatisfied` or :class:`Unreachable`.
    """
    if not n_min < n_max:
        raise ValueError("need n_min < n_max")
    sign = 1.0 if orientation == MAXIMIZE else -1.0
    t = sign * threshold

    def band(z):
        def f(ns):
            m, s = gp_predict(model, ns)
            return sign * m + z * s
        return f

    grid = np.geomspace(n_min, n_max, CROSSING_GRID)
    mean_f = band(0.0)
    if mean_f(grid[:1])[0] >= t:
        return AlreadySatisfied(n_min)
    m_max, s_max = gp_predict(model, float(n_max))
    n_hat = _first_crossing(mean_f, grid, t)
    if sign * m_max + 2 * s_max < t or n_hat is None:
        return Unreachable(float(m_max), float(s_max))
    ci_low = _first_crossing(band(BAND_Z), grid, t)
    ci_high = _first_crossing(band(-BAND_Z), grid, t)
    if ci_high is None:
        ci_high = float(n_max)
    ci_low = min(ci_low, n_hat)
    ci_high = max(ci_high, n_hat)
    monotone = bool(np.all(np.diff(mean_f(grid)) >= -1e-12))
    return Crossing(n_hat, ci_low, ci_high, monotone)
