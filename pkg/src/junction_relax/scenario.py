"""Scenario files and tabular outputs.

A scenario is a JSON object::

    {
      "command": "relax-table",
      "hamiltonians": [{"preset": "absolute_value"},
                       {"breakpoints": [[-1, 1], [0, 0], [1, 1]],
                        "left_slope": -1, "right_slope": 1}],
      "junction_function": {"family": "constant", "value": 1},
      "parameters": {"lower": -3, "upper": 3, "step": 0.5},
      "seed": 0
    }

``junction_function`` records are the ``to_record`` output of the
junction function families; a ``constant`` record without ``dim`` takes the
number of branches.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .hamiltonians import BranchHamiltonian
from .junction import JunctionFunction, JunctionHamiltonian, junction_from_record
from .standard import absolute_value, double_well

COMMANDS = ("relax-eval", "relax-table", "riemann", "solve", "tensor", "audit", "equivalence-demo")
PRESETS = {"absolute_value": absolute_value, "double_well": double_well}


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class Scenario:
    command: str
    ham: JunctionHamiltonian
    f0: JunctionFunction | None
    parameters: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    source: dict[str, Any] = field(default_factory=dict)


def branch_from_record(record: dict, label: int, where: str) -> BranchHamiltonian:
    if not isinstance(record, dict):
        raise ScenarioError(where, "expected an object")
    if "preset" in record:
        try:
            return PRESETS[record["preset"]](label)
        except KeyError:
            raise ScenarioError(f"{where}.preset", f"unknown preset {record['preset']!r}; known: {sorted(PRESETS)}")
    for key in ("breakpoints", "left_slope", "right_slope"):
        if key not in record:
            raise ScenarioError(f"{where}.{key}", "missing")
    try:
        return BranchHamiltonian.from_record(record, label)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(where, str(exc)) from exc


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "expected an object")
    command = data.get("command")
    if command not in COMMANDS:
        raise ScenarioError("command", f"expected one of {list(COMMANDS)}, got {command!r}")
    records = data.get("hamiltonians")
    if not isinstance(records, list) or not records:
        raise ScenarioError("hamiltonians", "expected a non-empty list")
    ham = JunctionHamiltonian(
        [branch_from_record(r, k + 1, f"hamiltonians[{k}]") for k, r in enumerate(records)]
    )
    f0 = None
    jf = data.get("junction_function")
    if jf is not None:
        try:
            f0 = junction_from_record(jf, ham)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError("junction_function", str(exc)) from exc
        if f0.dim != ham.n:
            raise ScenarioError("junction_function", f"acts on {f0.dim} slopes but there are {ham.n} branches")
    elif command != "equivalence-demo":
        raise ScenarioError("junction_function", "missing")
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise ScenarioError("parameters", "expected an object")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("seed", "expected an integer")
    return Scenario(command, ham, f0, params, seed, data)


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON: {exc}") from exc
    return scenario_from_dict(data)


def write_relaxation_table(path: str | Path, P, values, witnesses, method: str) -> Path:
    """CSV with columns ``p1..pN, value, witness1..witnessN, method``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    W = np.atleast_2d(np.asarray(witnesses, dtype=float))
    n = P.shape[1]
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"p{k + 1}" for k in range(n)] + ["value"] + [f"witness{k + 1}" for k in range(n)] + ["method"])
        for p, v, q in zip(P, np.asarray(values, dtype=float), W):
            w.writerow([repr(float(x)) for x in p] + [repr(float(v))] + [repr(float(x)) for x in q] + [method])
    return path


def read_relaxation_table(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = header.index("value")
    data = np.array([[float(x) for x in r[:-1]] for r in body]).reshape(len(body), 2 * n + 1)
    return data[:, :n], data[:, n], data[:, n + 1 :], [r[-1] for r in body]
