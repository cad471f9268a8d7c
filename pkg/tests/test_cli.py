from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from junction_relax.cli import main
from junction_relax.scenario import ScenarioError, read_relaxation_table, scenario_from_dict

SCENARIOS = sorted((Path(__file__).resolve().parents[1] / "demos" / "scenarios").glob("*.json"))


def _write(tmp_path: Path, record: dict) -> Path:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(record))
    return path


def _summary(out: Path) -> dict:
    return json.loads((out / "summary.json").read_text())


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_demo_scenarios_pass(path, tmp_path):
    assert main(["--scenario", str(path), "--out", str(tmp_path)]) == 0
    assert _summary(tmp_path)["status"] == "pass"


def test_relax_eval_prints_value_and_witness(tmp_path, capsys):
    path = _write(
        tmp_path,
        {
            "command": "relax-eval",
            "hamiltonians": [{"preset": "absolute_value"}],
            "junction_function": {"family": "constant", "value": 1.0},
            "parameters": {"p": [2.0]},
        },
    )
    assert main(["--scenario", str(path), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "p=[2.0] value=1.0000000000000" in out and "witness=[1.0000000000000" in out
    point = _summary(tmp_path / "o")["results"]["points"][0]
    assert point["value"] == pytest.approx(1.0, abs=1e-12)


def test_audit_reports_both_relaxation_flags(tmp_path):
    path = _write(
        tmp_path,
        {
            "command": "audit",
            "hamiltonians": [{"preset": "absolute_value"}],
            "junction_function": {"family": "flux_limiter", "A": 1.0},
            "parameters": {"expect": {"sub_relaxed": True, "super_relaxed": True}},
        },
    )
    assert main(["--scenario", str(path), "--out", str(tmp_path / "o")]) == 0


def test_relax_table_roundtrip(tmp_path):
    path = _write(
        tmp_path,
        {
            "command": "relax-table",
            "hamiltonians": [{"preset": "absolute_value"}, {"preset": "double_well"}],
            "junction_function": {"family": "constant", "value": 0.5},
            "parameters": {"lower": -1, "upper": 1, "step": 0.5},
        },
    )
    assert main(["--scenario", str(path), "--out", str(tmp_path / "o")]) == 0
    P, values, witnesses, methods = read_relaxation_table(tmp_path / "o" / "relax_table.csv")
    assert P.shape == (25, 2) and witnesses.shape == (25, 2)
    assert np.all(values >= 0.5 - 1e-12)
    assert set(methods) == {"composed"}


@pytest.mark.parametrize(
    "record, field",
    [
        ({"command": "fly"}, "command"),
        ({"command": "relax-eval", "hamiltonians": []}, "hamiltonians"),
        (
            {"command": "relax-eval", "hamiltonians": [{"preset": "parabola"}], "junction_function": {"family": "constant", "value": 1}},
            "hamiltonians[0].preset",
        ),
        (
            {"command": "relax-eval", "hamiltonians": [{"preset": "absolute_value"}], "junction_function": {"family": "constant", "value": 1, "dim": 2}},
            "junction_function",
        ),
    ],
)
def test_invalid_scenarios_name_the_field(record, field, tmp_path, capsys):
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(record)
    assert err.value.field == field
    assert main(["--scenario", str(_write(tmp_path, record)), "--out", str(tmp_path / "o")]) == 2
    assert field in capsys.readouterr().err


def test_missing_point_is_a_validation_error(tmp_path):
    path = _write(
        tmp_path,
        {
            "command": "relax-eval",
            "hamiltonians": [{"preset": "absolute_value"}],
            "junction_function": {"family": "constant", "value": 1.0},
            "parameters": {},
        },
    )
    assert main(["--scenario", str(path), "--out", str(tmp_path / "o")]) == 2


def test_tolerance_breach_gives_exit_status_one(tmp_path):
    # deviations sit at rounding level, far above a 1e-30 tolerance
    scenario = next(p for p in SCENARIOS if p.stem == "equivalence_abs")
    assert main(["--scenario", str(scenario), "--out", str(tmp_path), "--tolerance-scale", "1e-30"]) == 1
    assert _summary(tmp_path)["status"] == "fail"


def test_runs_are_deterministic_and_record_the_seed(tmp_path):
    scenario = next(p for p in SCENARIOS if p.stem == "audit_flux_limiter")
    main(["--scenario", str(scenario), "--out", str(tmp_path / "a"), "--seed", "7"])
    main(["--scenario", str(scenario), "--out", str(tmp_path / "b"), "--seed", "7"])
    a, b = _summary(tmp_path / "a"), _summary(tmp_path / "b")
    assert a["seed"] == 7
    for rec in (a, b):
        rec["results"].pop("elapsed_seconds")
        rec.pop("files")
    assert a == b


def test_module_entry_point(tmp_path):
    scenario = next(p for p in SCENARIOS if p.stem == "relax_eval_constant")
    proc = subprocess.run(
        [sys.executable, "-m", "junction_relax", "--scenario", str(scenario), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "[PASS]" in proc.stdout
