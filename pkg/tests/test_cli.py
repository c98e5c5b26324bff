"""Command-line interface: formulas, runs, config handling, exit codes."""
import io
import json
import math
import subprocess

import pytest

from mimosched import (
    SingularMatrixError,
    config_from_dict,
    emit_csv,
    loss_rr_cm,
    loss_single_block,
    loss_upper_bound,
    run_experiment,
)
from mimosched.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip(), out.err


def test_eq6_default_output(capsys):
    code, out, _ = _run(capsys, "analytic", "--formula", "eq6")
    assert code == 0
    assert out == "3.4594316186372973"


def test_eq11_default_output(capsys):
    code, out, _ = _run(capsys, "analytic", "--formula", "eq11")
    assert code == 0
    assert float(out) == pytest.approx(math.log2(1.0 + 320.0 / 131.0), rel=1e-15)


def test_eq12_matches_library(capsys):
    code, out, _ = _run(capsys, "analytic", "--formula", "eq12")
    assert code == 0
    # 17 significant digits round-trip the float exactly
    assert float(out) == loss_single_block(64, 32, 1, 0.01, 10.0)


def test_eq12_power_flags(capsys):
    _, linear, _ = _run(capsys, "analytic", "--formula", "eq12", "--P", "100")
    _, db, _ = _run(capsys, "analytic", "--formula", "eq12", "--P_dB", "20")
    assert float(linear) == pytest.approx(float(db), rel=1e-12)
    _, base, _ = _run(capsys, "analytic", "--formula", "eq12")
    _, deep, _ = _run(capsys, "analytic", "--formula", "eq12", "--delta", "0.001")
    assert float(deep) > float(base)


def test_eq17_matches_library(capsys, p_default):
    code, out, _ = _run(capsys, "analytic", "--formula", "eq17")
    assert code == 0
    assert float(out) == loss_rr_cm(p_default, 1, 0.01)


def test_eq21_matches_library(capsys, p_default):
    code, out, _ = _run(capsys, "analytic", "--formula", "eq21")
    assert code == 0
    assert float(out) == loss_upper_bound(p_default, 1, 0.01)
    assert float(out) == pytest.approx(0.1288681265059230, rel=1e-12)


def test_eq22_block_rate(capsys):
    code, out, _ = _run(capsys, "analytic", "--formula", "eq22",
                        "--betas", "0.5,0.2,0.1")
    assert code == 0
    assert float(out) == pytest.approx(math.log2(627.0 / 17.0), rel=1e-12)


def test_eq22_requires_betas(capsys):
    code, _, err = _run(capsys, "analytic", "--formula", "eq22")
    assert code == 2
    assert "configuration error" in err


def test_eq17_rejects_ragged_layout(capsys):
    code, _, err = _run(capsys, "analytic", "--formula", "eq17",
                        "--K", "30", "--K_B", "8")
    assert code == 2
    assert "multiple" in err


def test_unknown_formula_exits_via_argparse(capsys):
    with pytest.raises(SystemExit):
        main(["analytic", "--formula", "eq99"])


def test_run_preset_with_overrides(tmp_path, capsys):
    out = tmp_path / "a.csv"
    code = main(["run", "--preset", "fig2", "--trials", "4", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.startswith("scenario,sweep,sweep_value,metric,mean,std,ci95,trials,drops,seed\n")
    assert ",4," in text          # the trial override reached the rows
    again = tmp_path / "b.csv"
    assert main(["run", "--preset", "fig2", "--trials", "4", "--out", str(again)]) == 0
    assert again.read_text() == text
    pooled = tmp_path / "c.csv"
    assert main(["run", "--preset", "fig2", "--trials", "4", "--workers", "2",
                 "--out", str(pooled)]) == 0
    assert pooled.read_text() == text


def test_run_config_file_round_trip(tmp_path, capsys):
    d = {"trials": 6, "seed": 3, "sweep": "K_M", "sweep_values": [0, 1],
         "label": "cli-test"}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(d))
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    buf = io.StringIO()
    emit_csv(run_experiment(config_from_dict(d)), buf)
    assert out.read_text() == buf.getvalue()


def test_run_rejects_bad_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "x.csv"
    assert main(["run", "--config", str(bad), "--out", str(out)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"power": 3}))
    assert main(["run", "--config", str(unknown), "--out", str(out)]) == 2
    ragged = tmp_path / "ragged.json"
    ragged.write_text(json.dumps({"K": 30}))
    assert main(["run", "--config", str(ragged), "--out", str(out)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json"),
                 "--out", str(out)]) == 2
    capsys.readouterr()


def test_run_requires_source(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--out", "x.csv"])


def test_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise SingularMatrixError("synthetic breakdown")
    monkeypatch.setattr("mimosched.analytic.loss_rr_cm", boom)
    code, _, err = _run(capsys, "analytic", "--formula", "eq17")
    assert code == 3
    assert "numerical failure" in err


def test_installed_entry_point():
    r = subprocess.run(["mimosched", "analytic", "--formula", "eq6"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.strip() == "3.4594316186372973"
