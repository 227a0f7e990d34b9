import numpy as np
import pytest

from samplecurve.datagen import GeneratorSpec, tune_scale

CASES = {
    "case1": dict(n_true=10, target_prevalence=0.063, target_performance=0.82),
    "case2": dict(n_true=44, target_prevalence=0.11, target_performance=0.86),
    "case3": dict(n_true=17, target_prevalence=0.25, target_performance=0.80),
}
REFERENCE_N = {"case1": 3510, "case2": 4198, "case3": 1439}


@pytest.fixture(scope="session")
def case1_gen():
    return tune_scale(GeneratorSpec(**CASES["case1"]), seed=1)


@pytest.fixture(scope="session")
def small_gen():
    spec = GeneratorSpec(n_true=4, n_noise=1, target_prevalence=0.3, target_performance=0.78)
    return tune_scale(spec, mc_size=100_000, seed=3, eval_size=100_000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


FROZEN_N = (60, 120, 240, 480, 960, 1920, 3840)


@pytest.fixture(scope="session")
def frozen_values(small_gen):
    """Replicate metric values per n, simulated once and then held fixed."""
    from samplecurve.metrics import MetricSpec
    from samplecurve.models import get_strategy
    from samplecurve.simulate import run_at_n

    metrics = [MetricSpec("auc", 0.7), MetricSpec("calibration_slope", 0.9)]
    out = {}
    for n in FROZEN_N:
        s = run_at_n(small_gen, get_strategy("logistic"), metrics, n, 100, 20_000, 11)
        out[n] = {k: m.values for k, m in s.metrics.items()}
    return out


def solve_frozen(frozen, kind, threshold, assurance=0.8, criterion="assurance"):
    """Crossing n on frozen replicate values; deterministic given ``frozen``."""
    from samplecurve.metrics import MetricSpec
    from samplecurve.search import solve_on_curve
    from samplecurve.simulate import summarize
    from samplecurve.surrogate import CurveObservation

    metric = MetricSpec(kind, threshold)
    obs = []
    for n, vals in sorted(frozen.items()):
        s = summarize(kind, metric.orientation, vals[kind], 1 - assurance, 200, seed=n)
        y, se = s.statistic(criterion)
        obs.append(CurveObservation(n, y, se))
    _, crossing = solve_on_curve(obs, metric, min(frozen), max(frozen))
    return crossing


ACCEPTANCE: list[str] = []


@pytest.fixture
def accept(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``with accept(3, "metric oracles") as note: ...``; ``note(text)``
    attaches measured values to the line.
    """
    from contextlib import contextmanager

    @contextmanager
    def record(number, title):
        details = []
        try:
            yield details.append
        except BaseException:
            line = f"criterion {number} FAIL  {title}"
            raise
        else:
            line = f"criterion {number} PASS  {title}"
        finally:
            if details:
                line += "  [" + "; ".join(details) + "]"
            ACCEPTANCE.append(line)
            print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
