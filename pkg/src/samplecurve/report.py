"""Serialisation of results: JSON, CSV, plain-text report and SVG plot."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from html import escape
from pathlib import Path

import numpy as np

from .baselines import EpvInput, epv_sample_size
from .errors import SampleCurveError
from .search import MetricResult, SampleSizeResult
from .simulate import PerformanceSummary
from .surrogate import gp_predict

SUMMARY_COLUMNS = ("n", "metric", "R", "failures", "mean", "sd", "q20", "q20_se")
CURVE_COLUMNS = ("n", "y", "se", "gp_mean", "gp_sd")


def _round(x):
    """Recursively round floats to 15 significant digits; NaN/inf become null."""
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.15g}")
    return x


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.15g}"
    return str(x)


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def baselines_for(result: SampleSizeResult, epv: float = 10.0) -> dict:
    spec = result.generator.spec
    if spec.outcome_type != "binary":
        return {}
    try:
        n = epv_sample_size(EpvInput(spec.p, spec.target_prevalence, epv))
    except SampleCurveError:
        return {}
    return {"epv": {"epv": epv, "p": spec.p, "prevalence": spec.target_prevalence, "n_required": n}}


def summary_dict(summary: PerformanceSummary) -> dict:
    return {
        "n": summary.n,
        "R": summary.R,
        "q": summary.q,
        "metrics": {
            k: {
                "mean": m.mean, "sd": m.sd, "mean_se": m.mean_se,
                "quantile": m.quantile, "quantile_se": m.quantile_se,
                "failures": m.failures,
            }
            for k, m in summary.metrics.items()
        },
    }


def curve_rows(mr: MetricResult) -> list[dict]:
    rows = []
    for o in mr.observations:
        gm, gs = (gp_predict(mr.gp_model, o.n) if mr.gp_model is not None else (math.nan, math.nan))
        rows.append({"n": o.n, "y": o.y, "se": o.se, "gp_mean": gm, "gp_sd": gs})
    return rows


def _metric_dict(mr: MetricResult) -> dict:
    m = mr.metric
    cross = mr.crossing
    return {
        "orientation": m.orientation,
        "target_mode": m.target_mode,
        "threshold": m.threshold,
        "ideal": m.ideal,
        "deviation": m.deviation,
        "status": mr.status,
        "n_required": mr.n_required,
        "crossing": None if cross is None else {
            "n_hat": cross.n_hat, "ci_low": cross.ci_low, "ci_high": cross.ci_high,
            "monotone_posterior": cross.monotone,
        },
        "observations": curve_rows(mr),
        "gp": mr.gp,
        "power_law": mr.power_law,
        "n_hat_history": mr.history,
    }


def result_to_dict(result: SampleSizeResult, epv: float = 10.0) -> dict:
    conf = None
    if result.confirmation is not None:
        conf = summary_dict(result.confirmation)
        conf["confirmed"] = result.confirmed
    return _round({
        "criterion": result.criterion,
        "assurance": result.assurance,
        "master_seed": result.master_seed,
        "n_required": result.n_required,
        "flags": result.flags,
        "converged": result.converged,
        "iterations": result.iterations,
        "total_fits": result.total_fits,
        "generator": result.generator.to_dict(),
        "metrics": {k: _metric_dict(mr) for k, mr in result.metrics.items()},
        "confirmation": conf,
        "baselines": baselines_for(result, epv),
    })


def result_json(result: SampleSizeResult, epv: float = 10.0) -> str:
    return json.dumps(result_to_dict(result, epv), indent=2) + "\n"


def summaries_csv(summaries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in sorted(summaries, key=lambda s: s.n):
        for kind, m in s.metrics.items():
            w.writerow([s.n, kind, s.R, m.failures, _fmt(m.mean), _fmt(m.sd),
                        _fmt(m.quantile), _fmt(m.quantile_se)])
    return buf.getvalue()


def curve_csv(mr: MetricResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for row in curve_rows(mr):
        w.writerow([_fmt(row[c]) for c in CURVE_COLUMNS])
    return buf.getvalue()


def text_report(result: SampleSizeResult, epv: float = 10.0) -> str:
    gen = result.generator
    spec = gen.spec
    lines = ["Minimum development sample size", "=" * 31, ""]
    crit = "mean" if result.criterion == "mean" else f"assurance {result.assurance:.0%}"
    lines.append(f"criterion:        {crit}")
    lines.append(f"outcome:          {spec.outcome_type}, {spec.n_true} true + {spec.n_noise} noise predictors")
    if spec.outcome_type == "binary":
        lines.append(f"prevalence:       target {spec.target_prevalence}, achieved {gen.achieved_prevalence:.4f}")
    if gen.achieved_performance is not None:
        lines.append(f"large-sample M:   target {spec.target_performance}, achieved {gen.achieved_performance:.4f}")
    lines.append("")
    for kind, mr in result.metrics.items():
        m = mr.metric
        op = ">=" if m.orientation == "maximize" else "<="
        head = f"{kind} {op} {m.threshold:.4g}: "
        if mr.status == "crossing":
            c = mr.crossing
            head += f"n = {mr.n_required}  (80% band {math.floor(c.ci_low)}-{math.ceil(c.ci_high)})"
        elif mr.status == "already_satisfied":
            head += f"satisfied at n_min = {mr.n_required}"
        elif mr.status == "unreachable":
            head += "unreachable within n_max"
        else:
            head += "not enough usable curve points"
        lines.append(head)
    lines.append("")
    lines.append(f"recommended n:    {result.n_required if result.n_required is not None else 'none'}")
    if result.confirmation is not None:
        lines.append(f"confirmation:     {'passed' if result.confirmed else 'FAILED'} "
                     f"(R = {result.confirmation.R} at n = {result.confirmation.n})")
    base = baselines_for(result, epv)
    if "epv" in base:
        lines.append(f"EPV {base['epv']['epv']:g} baseline:  n = {base['epv']['n_required']}")
    lines.append(f"model fits run:   {result.total_fits}")
    if result.flags:
        lines.append(f"flags:            {', '.join(result.flags)}")
    return "\n".join(lines) + "\n"


def curve_svg(mr: MetricResult, n_min: int, n_max: int, width: int = 640, height: int = 400) -> str:
    """Learning curve, GP mean with 80% band, threshold and recommended n."""
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 45
    grid = np.geomspace(n_min, n_max, 120)
    if mr.gp_model is not None:
        mean, sd = gp_predict(mr.gp_model, grid)
    else:
        mean = sd = np.full(grid.size, np.nan)
    obs_y = np.array([o.y for o in mr.observations])
    lo_band, hi_band = mean - 1.28 * sd, mean + 1.28 * sd
    pool = np.concatenate([obs_y, lo_band, hi_band, [mr.metric.threshold]])
    pool = pool[np.isfinite(pool)]
    y0, y1 = float(pool.min()), float(pool.max())
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    margin = 0.05 * (y1 - y0)
    y0, y1 = y0 - margin, y1 + margin
    lx0, lx1 = math.log(n_min), math.log(n_max)

    def px(n):
        return pad_l + (math.log(n) - lx0) / (lx1 - lx0) * (width - pad_l - pad_r)

    def py(y):
        return pad_t + (y1 - y) / (y1 - y0) * (height - pad_t - pad_b)

    def path(xs, ys):
        pts = [f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y)]
        return " ".join(pts)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-size="13">{escape(mr.metric.kind)}</text>']
    if np.all(np.isfinite(sd)):
        band = path(grid, hi_band) + " " + path(grid[::-1], lo_band[::-1])
        out.append(f'<polygon points="{band}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>')
        out.append(f'<polyline points="{path(grid, mean)}" fill="none" stroke="#08519c" stroke-width="2"/>')
    t = mr.metric.threshold
    out.append(f'<line x1="{pad_l}" x2="{width - pad_r}" y1="{py(t):.2f}" y2="{py(t):.2f}" '
               f'stroke="#d62728" stroke-dasharray="6,4"/>')
    for o in mr.observations:
        out.append(f'<circle cx="{px(o.n):.2f}" cy="{py(o.y):.2f}" r="3.5" fill="black"/>')
        if o.se > 0:
            out.append(f'<line x1="{px(o.n):.2f}" x2="{px(o.n):.2f}" y1="{py(o.y - 1.96 * o.se):.2f}" '
                       f'y2="{py(o.y + 1.96 * o.se):.2f}" stroke="black"/>')
    if mr.n_required is not None:
        x = px(min(max(mr.n_required, n_min), n_max))
        out.append(f'<line x1="{x:.2f}" x2="{x:.2f}" y1="{pad_t}" y2="{height - pad_b}" stroke="#2ca02c"/>')
        out.append(f'<text x="{x + 4:.2f}" y="{pad_t + 12}" fill="#2ca02c">n = {mr.n_required}</text>')
    # axes
    out.append(f'<line x1="{pad_l}" x2="{width - pad_r}" y1="{height - pad_b}" y2="{height - pad_b}" stroke="black"/>')
    out.append(f'<line x1="{pad_l}" x2="{pad_l}" y1="{pad_t}" y2="{height - pad_b}" stroke="black"/>')
    decade = 10 ** math.ceil(math.log10(n_min))
    while decade <= n_max:
        x = px(decade)
        out.append(f'<line x1="{x:.2f}" x2="{x:.2f}" y1="{height - pad_b}" y2="{height - pad_b + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{height - pad_b + 18}" text-anchor="middle">{decade:g}</text>')
        decade *= 10
    for y in np.linspace(y0 + margin, y1 - margin, 5):
        out.append(f'<text x="{pad_l - 6}" y="{py(y) + 4:.2f}" text-anchor="end">{y:.3g}</text>')
    out.append(f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle">development sample size n</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
