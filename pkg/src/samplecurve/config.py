"""Run configuration: one JSON file fully determines a run.

Example::

    {
      "generator": {"outcome_type": "binary", "n_true": 10, "n_noise": 0,
                    "target_prevalence": 0.063, "target_performance": 0.82},
      "strategy": "logistic",
      "metrics": [{"kind": "calibration_slope", "threshold": 0.9},
                  {"kind": "auc", "deviation": 0.02}],
      "criterion": "assurance", "assurance": 0.8,
      "seed": 1,
      "output_dir": "out",
      "exports": {"curve_csv": true, "result_json": true, "plot_svg": true}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .datagen import GeneratorSpec
from .errors import ConfigError, SampleCurveError
from .metrics import MetricSpec
from .search import SolverConfig

EXPORTS = ("curve_csv", "result_json", "plot_svg")

_SOLVER_KEYS = {
    "criterion": "criterion",
    "assurance": "assurance",
    "n_min": "n_min",
    "n_max": "n_max",
    "r_search": "r_search",
    "r_confirm": "r_confirm",
    "validation_size": "validation_size",
    "max_iterations": "max_iterations",
    "tolerance": "tolerance",
    "seed": "master_seed",
    "tuning_mc_size": "tuning_mc_size",
    "tuning_eval_size": "tuning_eval_size",
    "fresh_validation": "fresh_validation",
}
_RUN_KEYS = {"generator", "strategy", "metrics", "output_dir", "exports", "log_level", "curve_n", "epv"}


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    output_dir: str = "samplecurve_out"
    exports: dict[str, bool] = field(default_factory=lambda: dict.fromkeys(EXPORTS, True))
    log_level: str = "INFO"
    curve_n: tuple[int, ...] = ()
    epv: float = 10.0


def _generator(raw) -> GeneratorSpec:
    if not isinstance(raw, dict):
        raise ConfigError("'generator' must be an object")
    known = {f.name for f in fields(GeneratorSpec)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown generator keys: {sorted(extra)}")
    return GeneratorSpec(**raw)


def _metrics(raw) -> tuple[MetricSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("'metrics' must be a nonempty list")
    out = []
    for item in raw:
        if isinstance(item, str):
            raise ConfigError(f"metric {item!r} needs a threshold or deviation")
        extra = set(item) - {"kind", "threshold", "deviation", "ideal", "orientation"}
        if extra or "kind" not in item:
            raise ConfigError(f"bad metric entry {item!r}")
        out.append(MetricSpec(**item))
    kinds = [m.kind for m in out]
    if len(set(kinds)) != len(kinds):
        raise ConfigError("each metric kind may appear once")
    return tuple(out)


def _strategy(raw) -> tuple[str, dict]:
    if raw is None:
        return "logistic", {}
    if isinstance(raw, str):
        return raw, {}
    if isinstance(raw, dict) and "tag" in raw:
        opts = {k: v for k, v in raw.items() if k != "tag"}
        return raw["tag"], opts
    raise ConfigError("'strategy' must be a tag string or an object with a 'tag'")


def parse_run_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    extra = set(raw) - _RUN_KEYS - set(_SOLVER_KEYS)
    if extra:
        raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
    if "generator" not in raw or "metrics" not in raw:
        raise ConfigError("configuration needs 'generator' and 'metrics'")
    try:
        tag, opts = _strategy(raw.get("strategy"))
        solver_kw = {dst: raw[src] for src, dst in _SOLVER_KEYS.items() if src in raw}
        solver = SolverConfig(generator=_generator(raw["generator"]), metrics=_metrics(raw["metrics"]),
                              strategy_tag=tag, strategy_options=opts, **solver_kw)
        solver.strategy()  # validates the tag and options early
        exports = dict.fromkeys(EXPORTS, True)
        for k, v in (raw.get("exports") or {}).items():
            if k not in EXPORTS:
                raise ConfigError(f"unknown export toggle {k!r}")
            exports[k] = bool(v)
        return RunConfig(
            solver=solver,
            output_dir=str(raw.get("output_dir", "samplecurve_out")),
            exports=exports,
            log_level=str(raw.get("log_level", "INFO")).upper(),
            curve_n=tuple(int(n) for n in raw.get("curve_n", ())),
            epv=float(raw.get("epv", 10.0)),
        )
    except ConfigError:
        raise
    except (SampleCurveError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_run_config(raw)
