"""Prediction models fitted to development data.

Built-in strategies are logistic regression (optionally ridge-penalised)
fitted by IRLS and ordinary least squares.  Other model classes plug in by
subclassing :class:`ModelStrategy` and calling :func:`register_strategy`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.special import expit

from .data import Dataset
from .errors import DegenerateDesign, DimensionMismatch, EmptyData, InvalidSpec

PROB_CLAMP = 1e-12
SEPARATION_ETA = 30.0


@dataclass(frozen=True)
class FittedModel:
    intercept: float
    coefficients: np.ndarray
    converged: bool
    iterations: int
    strategy_tag: str
    l2_penalty: float = 0.0
    family: str = "binomial"
    separated: bool = False
    deviance: float = float("nan")
    deviance_path: tuple[float, ...] = ()

    @property
    def p(self) -> int:
        return int(self.coefficients.shape[0])


def _penalized_deviance(eta: np.ndarray, y: np.ndarray, beta: np.ndarray, l2: float) -> float:
    dev = 2.0 * float(np.sum(np.logaddexp(0.0, eta) - y * eta))
    return dev + l2 * float(beta[1:] @ beta[1:])


def irls_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l2_penalty: float = 0.0,
    max_iterations: int = 50,
    tag: str = "logistic",
) -> FittedModel:
    """Penalised logistic regression by Newton/IRLS on raw arrays.

    The ridge term ``l2_penalty * ||w||^2`` is added to the deviance and never
    touches the intercept.  With ``l2_penalty == 0`` the fit stops early and
    reports ``separated=True`` once any linear predictor exceeds 30 in
    magnitude while the deviance is still falling.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n == 0:
        raise EmptyData("cannot fit a model to zero rows")
    if l2_penalty < 0:
        raise InvalidSpec("l2_penalty must be nonnegative")
    if l2_penalty == 0 and p and np.any(np.ptp(X, axis=0) == 0):
        raise DegenerateDesign("constant predictor column with no penalty")

    A = np.empty((n, p + 1))
    A[:, 0] = 1.0
    A[:, 1:] = X
    penalty = np.full(p + 1, l2_penalty)
    penalty[0] = 0.0

    ybar = min(max(y.mean(), 1e-4), 1 - 1e-4)
    beta = np.zeros(p + 1)
    beta[0] = np.log(ybar / (1 - ybar))
    eta = A @ beta
    dev = _penalized_deviance(eta, y, beta, l2_penalty)
    path = [dev]
    converged = separated = False
    it = 0
    while it < max_iterations:
        it += 1
        mu = expit(eta)
        w = mu * (1 - mu)
        grad = A.T @ (y - mu) - penalty * beta
        hess = (A * w[:, None]).T @ A
        hess[np.diag_indices_from(hess)] += penalty
        try:
            step = linalg.cho_solve(linalg.cho_factor(hess, check_finite=False), grad, check_finite=False)
        except linalg.LinAlgError:
            # Near-zero weights under separation make the Hessian singular.
            if l2_penalty == 0 and np.max(np.abs(eta)) > SEPARATION_ETA / 2:
                separated = True
                break
            raise DegenerateDesign("weighted normal equations are singular") from None
        if not np.all(np.isfinite(step)):
            raise DegenerateDesign("non-finite Newton step")

        # step halving keeps the penalised deviance nonincreasing
        scale = 1.0
        for _ in range(30):
            beta_new = beta + scale * step
            eta_new = A @ beta_new
            dev_new = _penalized_deviance(eta_new, y, beta_new, l2_penalty)
            if dev_new <= dev + 1e-12 * (abs(dev) + 1):
                break
            scale *= 0.5
        else:
            beta_new, eta_new, dev_new = beta, eta, dev

        delta = float(np.max(np.abs(beta_new - beta)))
        dev_drop = dev - dev_new
        beta, eta = beta_new, eta_new
        dev = min(dev, dev_new)
        path.append(dev)

        if l2_penalty == 0 and np.max(np.abs(eta)) > SEPARATION_ETA and dev_drop > 1e-3 * dev:
            separated = True
            break
        if delta < 1e-8 or abs(dev_drop) <= 1e-10 * abs(dev):
            converged = True
            break

    return FittedModel(
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        converged=converged and not separated,
        iterations=it,
        strategy_tag=tag,
        l2_penalty=float(l2_penalty),
        family="binomial",
        separated=separated,
        deviance=dev,
        deviance_path=tuple(path),
    )


def fit_logistic(data: Dataset, l2_penalty: float = 0.0, max_iterations: int = 50) -> FittedModel:
    if data.n == 0:
        raise EmptyData("cannot fit a model to zero rows")
    y = data.outcomes
    if not np.all((y == 0) | (y == 1)):
        raise InvalidSpec("logistic regression needs 0/1 outcomes")
    tag = "logistic_l2" if l2_penalty > 0 else "logistic"
    return irls_logistic(data.predictors, y, l2_penalty, max_iterations, tag=tag)


def fit_linear(data: Dataset) -> FittedModel:
    n, p = data.n, data.p
    if n == 0:
        raise EmptyData("cannot fit a model to zero rows")
    if n <= p + 1:
        raise DegenerateDesign(f"need n > p + 1 rows, got n={n}, p={p}")
    A = np.column_stack([np.ones(n), data.predictors])
    q, r = np.linalg.qr(A)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise DegenerateDesign("design matrix is rank deficient")
    beta = linalg.solve_triangular(r, q.T @ data.outcomes)
    resid = data.outcomes - A @ beta
    return FittedModel(
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        converged=True,
        iterations=1,
        strategy_tag="linear",
        family="gaussian",
        deviance=float(resid @ resid),
    )


def predict(model: FittedModel, predictors: np.ndarray) -> np.ndarray:
    X = np.asarray(predictors, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.p:
        raise DimensionMismatch(f"expected {model.p} columns, got shape {X.shape}")
    eta = model.intercept + X @ model.coefficients
    if model.family == "gaussian":
        return eta
    return np.clip(expit(eta), PROB_CLAMP, 1 - PROB_CLAMP)


class ModelStrategy:
    """How a model class is fitted and applied.

    Subclasses set ``tag`` and ``outcome_type`` and implement :meth:`fit`.
    A strategy whose fit is random must use the ``seed`` it is handed and set
    ``deterministic = False``.
    """

    tag: str = ""
    outcome_type: str = "binary"
    deterministic: bool = True

    def fit(self, data: Dataset, seed: int | None = None) -> FittedModel:
        raise NotImplementedError

    def predict(self, model: FittedModel, predictors: np.ndarray) -> np.ndarray:
        return predict(model, predictors)


class LogisticStrategy(ModelStrategy):
    outcome_type = "binary"

    def __init__(self, l2_penalty: float = 0.0, max_iterations: int = 50):
        self.l2_penalty = float(l2_penalty)
        self.max_iterations = max_iterations
        self.tag = "logistic_l2" if self.l2_penalty > 0 else "logistic"

    def fit(self, data: Dataset, seed: int | None = None) -> FittedModel:
        return fit_logistic(data, self.l2_penalty, self.max_iterations)


class LinearStrategy(ModelStrategy):
    tag = "linear"
    outcome_type = "continuous"

    def fit(self, data: Dataset, seed: int | None = None) -> FittedModel:
        return fit_linear(data)


_REGISTRY: dict[str, Callable[..., ModelStrategy]] = {}


def register_strategy(tag: str, factory: Callable[..., ModelStrategy]) -> None:
    _REGISTRY[tag] = factory


def available_strategies() -> list[str]:
    return sorted(_REGISTRY)


def get_strategy(tag: str, **options) -> ModelStrategy:
    try:
        factory = _REGISTRY[tag]
    except KeyError:
        raise InvalidSpec(f"unknown strategy {tag!r}; known: {available_strategies()}") from None
    return factory(**options)


def _logistic_l2(l2_penalty: float = 1.0, **kw) -> ModelStrategy:
    if l2_penalty <= 0:
        raise InvalidSpec("logistic_l2 needs a positive l2_penalty")
    return LogisticStrategy(l2_penalty, **kw)


register_strategy("logistic", lambda l2_penalty=0.0, **kw: LogisticStrategy(0.0, **kw))
register_strategy("logistic_l2", _logistic_l2)
register_strategy("linear", lambda **kw: LinearStrategy())
