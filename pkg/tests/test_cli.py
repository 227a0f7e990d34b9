import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
from conftest import CASES

from samplecurve import report
from samplecurve.cli import main
from samplecurve.config import parse_run_config
from samplecurve.search import solve_sample_size

GOLDEN = Path(__file__).parent / "golden"

CASE1_LIGHT = {
    "generator": CASES["case1"],
    "metrics": [{"kind": "calibration_slope", "threshold": 0.9}],
    "n_max": 20000, "r_search": 20, "r_confirm": 40, "validation_size": 20000,
    "max_iterations": 3, "tuning_mc_size": 100000, "tuning_eval_size": 100000, "seed": 7,
}

SMALL = {
    "generator": {"n_true": 4, "n_noise": 1, "target_prevalence": 0.3, "target_performance": 0.78},
    "metrics": [{"kind": "auc", "threshold": 0.75}, {"kind": "calibration_slope", "threshold": 0.9}],
    "n_min": 60, "n_max": 4000, "r_search": 20, "r_confirm": 40, "validation_size": 20000,
    "max_iterations": 4, "tuning_mc_size": 100000, "tuning_eval_size": 100000, "seed": 3,
    "log_level": "WARNING",
}


def write_config(tmp_path, raw, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def test_epv_case3(tmp_path, capsys):
    cfg = write_config(tmp_path, {"generator": CASES["case3"], "metrics": [{"kind": "auc", "threshold": 0.7}]})
    assert main(["epv", "--config", cfg]) == 0
    assert capsys.readouterr().out.strip() == "680"


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, {"generator": CASES["case1"], "metrics": [{"kind": "auc", "threshold": 0.7}]})
    out = subprocess.run([sys.executable, "-m", "samplecurve", "epv", "--config", cfg],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0 and out.stdout.strip() == "1588"


@pytest.mark.parametrize("text", ["{not json", '{"generator": {}, "metrics": []}',
                                  '{"generator": {"n_true": 3}, "metrics": [{"kind": "auc"}]}',
                                  '{"bogus": 1}'])
def test_bad_config_exit_2_and_no_outputs(tmp_path, capsys, text):
    cfg = tmp_path / "bad.json"
    cfg.write_text(text)
    out = tmp_path / "out"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 2


@pytest.mark.slow
def test_cli_matches_library_case1(tmp_path, capsys):
    cfg = write_config(tmp_path, CASE1_LIGHT)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out), "--threads", "2"]) in (0, 3)
    capsys.readouterr()
    run = parse_run_config(CASE1_LIGHT)
    library = report.result_json(solve_sample_size(run.solver, threads=1), run.epv)
    assert (out / "result.json").read_bytes() == library.encode()
    assert json.loads(library)["n_required"] is not None


@pytest.fixture(scope="module")
def solved_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("solve")
    cfg = write_config(tmp, SMALL)
    out = tmp / "out"
    code = main(["solve", "--config", cfg, "--out", str(out), "--threads", "1"])
    return code, out, cfg


def test_solve_outputs(solved_dir):
    code, out, _ = solved_dir
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"result.json", "report.txt", "summaries.csv", "curve_auc.csv",
            "curve_calibration_slope.csv", "curve_auc.svg"} <= names
    assert not [n for n in names if n.startswith(".") or n.endswith(".tmp")]
    doc = json.loads((out / "result.json").read_text())
    assert doc["baselines"]["epv"]["n_required"] == 167
    assert doc["n_required"] == max(m["n_required"] for m in doc["metrics"].values())
    assert (out / "curve_auc.svg").read_text().startswith("<svg")


def test_curve_csv_golden_header(solved_dir):
    _, out, _ = solved_dir
    for name in ("curve_auc.csv", "curve_calibration_slope.csv"):
        with open(out / name, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == (GOLDEN / "curve_header.csv").read_text().strip().split(",")
        assert all(len(r) == len(rows[0]) for r in rows)
    with open(out / "summaries.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == (GOLDEN / "summaries_header.csv").read_text().strip().split(",")


def test_rerun_is_byte_identical(solved_dir, tmp_path):
    _, out, cfg = solved_dir
    again = tmp_path / "again"
    assert main(["solve", "--config", cfg, "--out", str(again), "--threads", "3", "--no-plot"]) == 0
    for name in ("result.json", "curve_auc.csv", "summaries.csv"):
        assert (again / name).read_bytes() == (out / name).read_bytes()
    assert not (again / "curve_auc.svg").exists()


def test_seed_override_changes_run(solved_dir, tmp_path):
    _, out, cfg = solved_dir
    other = tmp_path / "other"
    assert main(["solve", "--config", cfg, "--out", str(other), "--seed", "99", "--no-plot"]) == 0
    doc = json.loads((other / "result.json").read_text())
    assert doc["master_seed"] == 99
    assert (other / "result.json").read_bytes() != (out / "result.json").read_bytes()


def test_unreachable_only_exit_3(tmp_path, capsys):
    raw = dict(SMALL, metrics=[{"kind": "auc", "threshold": 0.9}])
    cfg = write_config(tmp_path, raw)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plot"]) == 3
    assert json.loads((tmp_path / "o" / "result.json").read_text())["n_required"] is None


def test_tune_command(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert main(["tune", "--config", cfg, "--out", str(tmp_path / "t")]) == 0
    printed = json.loads(capsys.readouterr().out)
    saved = json.loads((tmp_path / "t" / "tuned_generator.json").read_text())
    assert printed == saved
    assert abs(saved["achieved_prevalence"] - 0.3) < 0.01


def test_curve_command(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert main(["curve", "--config", cfg, "--out", str(tmp_path / "c"), "--n", "400", "100"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert [r[0] for r in rows[1:]] == ["100", "100", "400", "400"]
    assert main(["curve", "--config", cfg, "--out", str(tmp_path / "c2")]) == 2
