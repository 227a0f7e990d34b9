"""Command-line front end.

    samplecurve solve --config run.json [--seed N] [--threads N] [--out DIR] [--no-plot]
    samplecurve curve --config run.json [--n 100 400 1600]
    samplecurve tune  --config run.json
    samplecurve epv   --config run.json

Exit status: 0 success, 2 configuration error, 3 every metric unreachable,
4 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import report
from .baselines import EpvInput, epv_sample_size
from .config import RunConfig, _generator, load_run_config
from .datagen import tune_scale
from .errors import ConfigError, SampleCurveError
from .search import resolve_threshold, solve_sample_size
from .simulate import draw_validation, run_at_n

EXIT_OK, EXIT_CONFIG, EXIT_UNREACHABLE, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("samplecurve")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samplecurve",
                                     description="Simulation-based sample size for prediction models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("solve", "search for the minimum sample size"),
                        ("curve", "evaluate the learning curve on a fixed n grid"),
                        ("tune", "tune the data generator only"),
                        ("epv", "events-per-variable baseline")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="parallel replicate fits (default: all cores)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--no-plot", action="store_true", help="skip SVG output")
        if name == "curve":
            p.add_argument("--n", type=int, nargs="+", help="sample sizes to evaluate")
    return parser


def _setup_logging(level: str) -> None:
    level = os.environ.get("SAMPLECURVE_LOG", level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def _with_overrides(run: RunConfig, args) -> RunConfig:
    solver = run.solver
    if args.seed is not None:
        solver = dataclasses.replace(solver, master_seed=args.seed)
    out = args.out if args.out else run.output_dir
    return dataclasses.replace(run, solver=solver, output_dir=out)


def cmd_solve(run: RunConfig, args) -> int:
    cfg = run.solver
    result = solve_sample_size(cfg, threads=args.threads)
    out = Path(run.output_dir)
    if run.exports["result_json"]:
        report.atomic_write(out / "result.json", report.result_json(result, run.epv))
    text = report.text_report(result, run.epv)
    report.atomic_write(out / "report.txt", text)
    if run.exports["curve_csv"]:
        report.atomic_write(out / "summaries.csv", report.summaries_csv(result.summaries.values()))
        for kind, mr in result.metrics.items():
            report.atomic_write(out / f"curve_{kind}.csv", report.curve_csv(mr))
    if run.exports["plot_svg"] and not args.no_plot:
        for kind, mr in result.metrics.items():
            report.atomic_write(out / f"curve_{kind}.svg", report.curve_svg(mr, cfg.n_min, cfg.n_max))
    sys.stdout.write(text)
    if result.metrics and all(m.status == "unreachable" for m in result.metrics.values()):
        return EXIT_UNREACHABLE
    return EXIT_OK


def cmd_curve(run: RunConfig, args) -> int:
    cfg = run.solver
    grid = args.n or list(run.curve_n)
    if not grid:
        raise ConfigError("curve needs sample sizes: --n or 'curve_n' in the config")
    gen = tune_scale(cfg.generator, cfg.tuning_mc_size, cfg.master_seed, cfg.tuning_eval_size)
    strategy = cfg.strategy()
    val = None if cfg.fresh_validation else draw_validation(gen, cfg.validation_size, cfg.master_seed)
    metrics = [resolve_threshold(m, gen, val) for m in cfg.metrics]
    summaries = [run_at_n(gen, strategy, metrics, n, cfg.r_search, cfg.validation_size,
                          cfg.master_seed, q=cfg.q, threads=args.threads, validation=val,
                          fresh_validation=cfg.fresh_validation)
                 for n in sorted(set(grid))]
    text = report.summaries_csv(summaries)
    if run.exports["curve_csv"]:
        report.atomic_write(Path(run.output_dir) / "summaries.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_tune(run: RunConfig, args) -> int:
    cfg = run.solver
    gen = tune_scale(cfg.generator, cfg.tuning_mc_size, cfg.master_seed, cfg.tuning_eval_size)
    text = gen.to_json() + "\n"
    report.atomic_write(Path(run.output_dir) / "tuned_generator.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_epv(config_path: str) -> int:
    try:
        raw = json.loads(Path(config_path).read_text())
        spec = _generator(raw["generator"])
        if spec.outcome_type != "binary":
            raise ConfigError("the EPV baseline needs a binary outcome")
        n = epv_sample_size(EpvInput(spec.p, spec.target_prevalence, float(raw.get("epv", 10.0))))
    except ConfigError:
        raise
    except (OSError, ValueError, KeyError, TypeError, SampleCurveError) as exc:
        raise ConfigError(str(exc)) from exc
    print(n)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "epv":
            _setup_logging("WARNING")
            return cmd_epv(args.config)
        run = _with_overrides(load_run_config(args.config), args)
        _setup_logging(run.log_level)
        handler = {"solve": cmd_solve, "curve": cmd_curve, "tune": cmd_tune}[args.command]
        return handler(run, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SampleCurveError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
