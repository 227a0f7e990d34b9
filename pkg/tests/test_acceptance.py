"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math

import numpy as np
import pytest
from conftest import CASES, REFERENCE_N, solve_frozen
from scipy.special import expit

from samplecurve.baselines import EpvInput, epv_sample_size
from samplecurve.cli import main
from samplecurve.datagen import GeneratorSpec, generate, tune_scale
from samplecurve.metrics import MetricSpec, auc, brier, calibration_slope, mape
from samplecurve.models import get_strategy
from samplecurve.rng import stream_id
from samplecurve.search import SolverConfig, solve_sample_size
from samplecurve.simulate import run_at_n
from samplecurve.surrogate import Crossing, CurveObservation, find_crossing, gp_fit, gp_predict


@pytest.mark.slow
@pytest.mark.parametrize("case", list(CASES))
def test_1_case_studies(accept, case):
    with accept(1, f"{case} calibration slope >= 0.9 at 80% assurance") as note:
        cfg = SolverConfig(GeneratorSpec(**CASES[case]), [MetricSpec("calibration_slope", 0.9)],
                           master_seed=1)
        res = solve_sample_size(cfg)
        n = res.n_required
        note(f"n={n} reference={REFERENCE_N[case]} flags={','.join(res.flags) or 'none'}")
        assert n is not None
        assert REFERENCE_N[case] / 2 <= n <= REFERENCE_N[case] * 2


def test_2_epv(accept):
    with accept(2, "EPV baseline") as note:
        c1 = epv_sample_size(EpvInput(10, 0.063))
        c3 = epv_sample_size(EpvInput(17, 0.25))
        note(f"case1={c1} case3={c3}")
        assert (c1, c3) == (1588, 680)


def test_3_metric_oracles(accept):
    with accept(3, "metric oracle equivalence") as note:
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(2, 201))
            y = rng.integers(0, 2, n)
            y[:2] = [0, 1]
            s = rng.integers(0, 12, n) / 11.0  # coarse grid: many ties
            pos, neg = s[y == 1], s[y == 0]
            diff = pos[:, None] - neg[None, :]
            pairwise = ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / (pos.size * neg.size)
            assert auc(s, y) == pairwise
            p = rng.uniform(0.01, 0.99, n)
            pi = rng.uniform(0.01, 0.99, n)
            hand_brier = sum((a - b) ** 2 for a, b in zip(p, y)) / n
            hand_mape = sum(abs(a - b) for a, b in zip(p, pi)) / n
            worst = max(worst, abs(brier(p, y) - hand_brier), abs(mape(p, pi) - hand_mape))
        note(f"max brier/mape error {worst:.1e}")
        assert worst < 1e-12


def test_4_slope_reparameterization(accept):
    with accept(4, "calibration slope under logit scaling") as note:
        rng = np.random.default_rng(4)
        eta = rng.normal(-1.0, 1.2, 100_000)
        y = (rng.random(eta.size) < expit(eta)).astype(float)
        got = {k: calibration_slope(expit(k * eta), y) for k in (0.5, 1.0, 2.0)}
        note(", ".join(f"k={k}: {v:.3f}" for k, v in got.items()))
        for k, v in got.items():
            assert abs(v - 1 / k) <= 0.1


@pytest.mark.slow
def test_5_generator_tuning(accept):
    with accept(5, "generator tuning on independent 1e6 draws") as note:
        errors = []
        for case, kw in CASES.items():
            spec = GeneratorSpec(**kw)
            gen = tune_scale(spec, seed=1, eval_size=0)
            d = generate(gen, 1_000_000, 987_654, stream_id("val"))
            prev = d.outcomes.mean()
            a = auc(d.true_prob, d.outcomes)
            errors.append((abs(prev - spec.target_prevalence), abs(a - spec.target_performance)))
            note(f"{case}: prevalence {prev:.4f} auc {a:.4f}")
        for e_prev, e_auc in errors:
            assert e_prev <= 0.002 and e_auc <= 0.005


def test_6_gp(accept):
    with accept(6, "GP interpolation, kernel oracle and synthetic crossing") as note:
        m2 = gp_fit([CurveObservation(100, 0.7), CurveObservation(1000, 0.85)])
        resid = max(abs(gp_predict(m2, 100)[0] - 0.7), abs(gp_predict(m2, 1000)[0] - 0.85))

        ns, ys = [100, 1000, 10000], [0.6, 0.8, 0.86]
        m3 = gp_fit([CurveObservation(n, y) for n, y in zip(ns, ys)])
        x = np.log(ns)
        K = m3.amplitude**2 * np.exp(-0.5 * ((x[:, None] - x[None, :]) / m3.length_scale) ** 2)
        K += m3.jitter * np.eye(3)
        w = np.linalg.solve(K, (np.array(ys) - m3.center) / m3.scale)
        oracle_err = 0.0
        for n_new in (math.sqrt(1e5), 300, 5000):
            k = m3.amplitude**2 * np.exp(-0.5 * ((math.log(n_new) - x) / m3.length_scale) ** 2)
            oracle_err = max(oracle_err, abs(gp_predict(m3, n_new)[0] - (m3.center + m3.scale * k @ w)))

        grid = np.geomspace(100, 10000, 9).round()
        m = gp_fit([CurveObservation(int(n), math.log(n) / math.log(1e6)) for n in grid])
        c = find_crossing(m, 0.5, n_min=100, n_max=10000)
        note(f"interp {resid:.1e}, oracle {oracle_err:.1e}, n_hat {getattr(c, 'n_hat', c)}")
        assert resid < 1e-8 and oracle_err < 1e-6
        assert isinstance(c, Crossing) and abs(c.n_hat / 1000 - 1) < 0.01


DETERMINISM_CONFIG = {
    "generator": {"n_true": 5, "n_noise": 2, "predictor_correlation": 0.2,
                  "target_prevalence": 0.3, "target_performance": 0.75},
    "metrics": [{"kind": "calibration_slope", "threshold": 0.9}, {"kind": "auc", "deviation": 0.03},
                {"kind": "brier", "deviation": 0.01}],
    "n_max": 20000, "r_search": 30, "r_confirm": 60, "validation_size": 20000,
    "max_iterations": 6, "tuning_mc_size": 100000, "tuning_eval_size": 100000, "seed": 5,
    "log_level": "WARNING",
}


def test_7_determinism(accept, tmp_path, capsys):
    with accept(7, "1 vs 8 threads give byte-identical result JSON") as note:
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(DETERMINISM_CONFIG))
        for t in (1, 8):
            assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / f"t{t}"),
                         "--threads", str(t), "--no-plot"]) == 0
        capsys.readouterr()
        a = (tmp_path / "t1" / "result.json").read_bytes()
        b = (tmp_path / "t8" / "result.json").read_bytes()
        note(f"{len(a)} bytes, n_required={json.loads(a)['n_required']}")
        assert a == b


def test_8_frozen_monotonicity(accept, frozen_values):
    def key(c):
        if isinstance(c, Crossing):
            return c.n_hat
        return -math.inf if type(c).__name__ == "AlreadySatisfied" else math.inf

    with accept(8, "crossing n monotone in threshold and assurance on frozen outputs") as note:
        checks = 0
        for kind, ts in [("calibration_slope", np.linspace(0.8, 0.96, 9)),
                         ("auc", np.linspace(0.72, 0.775, 9))]:
            deltas = (0.6, 0.7, 0.8, 0.9)
            table = [[key(solve_frozen(frozen_values, kind, t, d)) for t in ts] for d in deltas]
            for row in table:
                assert row == sorted(row)
            for col in zip(*table):
                assert list(col) == sorted(col)
            checks += len(ts) * len(deltas)
        note(f"{checks} crossings, delta in 0.6-0.9")


@pytest.mark.slow
def test_9_learning_curve_shape(accept, case1_gen):
    with accept(9, "case 1 mean calibration slope rises toward 1") as note:
        metric = MetricSpec("calibration_slope", 0.9)
        means, ses = [], []
        for n in (100, 400, 1600, 6400):
            s = run_at_n(case1_gen, get_strategy("logistic"), [metric], n, 500, master_seed=9).metrics[metric.kind]
            means.append(s.mean)
            ses.append(s.mean_se)
        note(", ".join(f"{m:.3f}" for m in means))
        inversions = 0
        for i in range(3):
            if means[i + 1] < means[i]:
                inversions += 1
                assert means[i] - means[i + 1] <= 2 * math.hypot(ses[i], ses[i + 1])
        assert inversions <= 1
        assert abs(1 - means[-1]) < abs(1 - means[0])
        assert abs(1 - means[-1]) < 0.05
