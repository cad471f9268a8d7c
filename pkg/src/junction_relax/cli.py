"""Command-line front end: one scenario file, one command, one summary.

Usage::

    junction-relax --scenario scen.json --out results/ [--seed N] [--tolerance-scale X]

Every command writes ``summary.json`` into the output directory.  It lists
the embedded checks with their measured values and limits.  The exit status
is 0 when all checks pass, 1 when some check fails and 2 for an invalid
scenario.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .junction import (
    AffineMonotone,
    Constant,
    EpsilonGraph,
    FluxLimiter,
    audit_monotonicity,
    semi_coercify,
)
from .limiters import build_limiter_tensor, explicit_relax_batch
from .relaxation import CommutationError, Relaxed, godunov_relax_batch, is_relaxed, relax_batch
from .riemann import germ_check, solve_riemann
from .scenario import Scenario, ScenarioError, load_scenario, write_relaxation_table
from .solver import (
    CFLViolation,
    EvolutionState,
    JunctionGrid,
    SchemeConfig,
    planar_profile,
    run,
    sawtooth_profile,
)


@dataclass
class Report:
    command: str
    seed: int
    tolerance_scale: float
    checks: list[dict] = field(default_factory=list)
    results: dict[str, Any] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    def check(self, name: str, value: float, limit: float, relation: str = "<=") -> bool:
        value = float(value)
        passed = bool(value <= limit) if relation == "<=" else bool(value >= limit)
        self.checks.append({"name": name, "value": value, "limit": limit, "relation": relation, "passed": passed})
        return passed

    def flag(self, name: str, passed: bool, detail: Any = None) -> bool:
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "status": "pass" if self.passed else "fail",
            "seed": self.seed,
            "tolerance_scale": self.tolerance_scale,
            "checks": self.checks,
            "results": self.results,
            "files": self.files,
        }


def _points(params: dict, n: int, key: str = "p") -> np.ndarray:
    if key not in params:
        raise ScenarioError(f"parameters.{key}", "missing")
    P = np.asarray(params[key], dtype=float)
    if P.ndim <= 1:
        P = P.reshape(1, -1)
    if P.shape[1] != n:
        raise ScenarioError(f"parameters.{key}", f"expected {n} coordinates per point")
    return P


def _per_branch(value, n: int, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)) if np.ndim(value) == 0 else np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ScenarioError(f"parameters.{name}", f"expected a number or {n} numbers")
    return arr


def _grid_points(params: dict, n: int, lower=-5.0, upper=5.0, step=0.1) -> np.ndarray:
    if "points" in params:
        return _points(params, n, "points")
    lo = _per_branch(params.get("lower", lower), n, "lower")
    hi = _per_branch(params.get("upper", upper), n, "upper")
    st = float(params.get("step", step))
    if st <= 0:
        raise ScenarioError("parameters.step", "must be positive")
    axes = [np.round(np.arange(a, b + 0.5 * st, st), 12) for a, b in zip(lo, hi)]
    return np.array(list(itertools.product(*axes)))


def cmd_relax_eval(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    P = _points(sc.parameters, sc.ham.n)
    values, witnesses, gap = relax_batch(sc.f0, sc.ham, P, tol=np.inf)
    godunov, _ = godunov_relax_batch(semi_coercify(sc.f0, sc.ham), sc.ham, P)
    rep.results["points"] = [
        {"p": p.tolist(), "value": float(v), "witness": q.tolist()} for p, v, q in zip(P, values, witnesses)
    ]
    for p, v, q in zip(P, values, witnesses):
        print(f"p={p.tolist()} value={v:.15g} witness={q.tolist()}")
    rep.check("composition_orders_gap", gap.max(), 1e-9 * scale)
    rep.check("godunov_vs_composed", np.abs(godunov - values).max(), 1e-9 * scale)


def cmd_relax_table(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    P = _grid_points(sc.parameters, sc.ham.n)
    values, witnesses, gap = relax_batch(sc.f0, sc.ham, P, tol=np.inf)
    path = write_relaxation_table(out / "relax_table.csv", P, values, witnesses, "composed")
    rep.files.append(str(path))
    rep.results["rows"] = int(P.shape[0])
    rep.check("composition_orders_gap", gap.max(), 1e-9 * scale)


def cmd_riemann(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    p = _points(sc.parameters, sc.ham.n)[0]
    prm = sc.parameters
    sol = solve_riemann(
        sc.f0, sc.ham, p, dx=float(prm.get("dx", 1 / 200)), T=float(prm.get("T", 1.0)), cfl=float(prm.get("cfl", 0.9))
    )
    rep.files.append(str(sol.write_profiles(out / "riemann_profiles.csv")))
    rep.files.append(str(sol.write_summary(out / "riemann_summary.json")))
    rep.results.update(sol.summary())
    rep.check("junction_slope_error", sol.value_error, 5e-2 * scale)
    rep.check("p_hat_error", sol.p_hat_error, 5e-2 * scale)
    rep.check("self_similarity_residual", sol.self_similarity_residual, 5e-2 * scale)
    rep.flag("single_sign_curvature", "mixed" not in sol.convexity, list(sol.convexity))
    rep.flag("p_hat_in_germ", germ_check(Relaxed(sc.f0, sc.ham), sc.ham, sol.p_hat_exact))


def _initial_profile(record: dict, n: int) -> Callable[[int, np.ndarray], np.ndarray]:
    kind = record.get("kind", "planar")
    if kind == "planar":
        return planar_profile(_per_branch(record.get("slopes", 0.0), n, "initial.slopes"))
    if kind == "sawtooth":
        return sawtooth_profile(float(record.get("slope", 1.0)), float(record.get("period", 0.5)))
    if kind == "sine":
        amp = _per_branch(record.get("amplitude", 0.5), n, "initial.amplitude")
        freq = _per_branch(record.get("frequency", 3.0), n, "initial.frequency")
        return lambda a, x: amp[a] * np.sin(freq[a] * x)
    raise ScenarioError("parameters.initial.kind", f"unknown initial profile {kind!r}")


def cmd_solve(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    prm = sc.parameters
    dx = float(prm.get("dx", 1 / 100))
    length = float(prm.get("length", 2.0))
    T = float(prm.get("T", 1.0))
    init_record = prm.get("initial", {"kind": "planar"})
    profile = _initial_profile(init_record, sc.ham.n)
    boundary = prm.get("far_boundary", "neumann")
    pins = tuple(_per_branch(init_record.get("slopes", 0.0), sc.ham.n, "initial.slopes")) if boundary == "planar_pin" else None
    grid = JunctionGrid(sc.ham.n, int(round(length / dx)), dx, boundary, pins)
    config = SchemeConfig(junction_flux=prm.get("junction_flux", "strong_relaxed"), cfl=float(prm.get("cfl", 0.9)))
    initial = EvolutionState.from_profile(grid, profile)
    box = np.asarray(prm["gradient_box"], dtype=float) if "gradient_box" in prm else None
    try:
        traj = run(initial, sc.f0, sc.ham, grid, config, T, output_times=prm.get("output_times", []), gradient_box=box)
    except CFLViolation as exc:
        rep.flag("cfl", False, str(exc))
        return
    rep.flag("cfl", True)
    rep.files.append(str(traj.write_csv(out / "trajectory.csv")))
    rep.results.update(
        {
            "dt": traj.dt,
            "steps": int(traj.times.size - 1),
            "junction_value_final": float(traj.final.junction),
            "gradient_envelope": traj.max_gradient_box.tolist(),
            "far_boundary": boundary,
            "junction_flux": config.junction_flux,
        }
    )
    if "expect_box" in prm:
        expect = np.asarray(prm["expect_box"], dtype=float)
        env = traj.max_gradient_box
        excess = max(float(np.max(expect[:, 0] - env[:, 0])), float(np.max(env[:, 1] - expect[:, 1])), 0.0)
        rep.check("gradient_box_excess", excess, 1e-12 * scale)


def cmd_tensor(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    tensor = build_limiter_tensor(sc.f0, sc.ham)
    path = out / "tensor.json"
    path.write_text(json.dumps(tensor.to_record(), indent=2))
    rep.files.append(str(path))
    rep.results["tensor"] = tensor.to_record()
    rep.flag("tensor_monotone", tensor.is_monotone())
    samples = int(sc.parameters.get("samples", 100))
    if samples:
        rng = np.random.default_rng(rep.seed)
        lo, hi = float(sc.parameters.get("lower", -3.0)), float(sc.parameters.get("upper", 3.0))
        P = rng.uniform(lo, hi, size=(samples, sc.ham.n))
        explicit = explicit_relax_batch(tensor, sc.ham, P)
        reference = relax_batch(sc.f0, sc.ham, P, tol=np.inf)[0]
        rep.check("explicit_vs_relax", np.abs(explicit - reference).max(), 1e-6 * scale)


def cmd_audit(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    P = _grid_points(sc.parameters, sc.ham.n, step=0.1 if sc.ham.n == 1 else 0.25)
    lo, hi = P.min(axis=0), P.max(axis=0)
    mono = audit_monotonicity(sc.f0, lo, hi, seed=rep.seed)
    rep.check("input_monotonicity_violations", mono.violations, 0)
    plain = is_relaxed(sc.f0, sc.ham, P, tol=1e-9 * scale, seed=rep.seed)
    rep.results["input"] = {
        "sub_relaxed": plain.sub_relaxed,
        "super_relaxed": plain.super_relaxed,
        "first_sub_failure": None if plain.first_sub_failure is None else plain.first_sub_failure.tolist(),
        "first_super_failure": None if plain.first_super_failure is None else plain.first_super_failure.tolist(),
    }
    print(f"sub_relaxed={plain.sub_relaxed} super_relaxed={plain.super_relaxed}")
    relaxed = is_relaxed(Relaxed(sc.f0, sc.ham), sc.ham, P, tol=1e-9 * scale, seed=rep.seed)
    rep.flag("relaxation_is_relaxed", relaxed.sub_relaxed and relaxed.super_relaxed)
    for key, want in sc.parameters.get("expect", {}).items():
        if key not in ("sub_relaxed", "super_relaxed"):
            raise ScenarioError(f"parameters.expect.{key}", "expected sub_relaxed or super_relaxed")
        rep.flag(f"expect_{key}", getattr(plain, key) == want, {"expected": want, "found": getattr(plain, key)})


def cmd_equivalence(sc: Scenario, out: Path, rep: Report, scale: float) -> None:
    if sc.ham.n != 1:
        raise ScenarioError("hamiltonians", "the equivalence demonstration uses a single branch")
    A = float(sc.parameters.get("A", 1.0))
    eps = [float(e) for e in sc.parameters.get("epsilons", [1.0, 0.1, 0.01])]
    P = _grid_points(sc.parameters, 1)
    conditions = {"flux_limited": FluxLimiter(A, sc.ham), "constant": Constant(A), "affine": AffineMonotone(2 * A, [1.0])}
    conditions.update({f"epsilon_graph_{e:g}": EpsilonGraph(A, e) for e in eps})
    table = {name: relax_batch(f, sc.ham, P, tol=np.inf)[0] for name, f in conditions.items()}
    names = list(table)
    deviation = max(
        (float(np.abs(table[a] - table[b]).max()) for a, b in itertools.combinations(names, 2)), default=0.0
    )
    path = out / "equivalence_table.csv"
    with path.open("w") as fh:
        fh.write(",".join(["p"] + names) + "\n")
        for k, p in enumerate(P[:, 0]):
            fh.write(",".join([repr(float(p))] + [repr(float(table[n][k])) for n in names]) + "\n")
    rep.files.append(str(path))
    rep.results["conditions"] = names
    rep.results["max_pairwise_deviation"] = deviation
    print(f"max pairwise deviation = {deviation:.3e}")
    rep.check("max_pairwise_deviation", deviation, 1e-9 * scale)


COMMAND_TABLE = {
    "relax-eval": cmd_relax_eval,
    "relax-table": cmd_relax_table,
    "riemann": cmd_riemann,
    "solve": cmd_solve,
    "tensor": cmd_tensor,
    "audit": cmd_audit,
    "equivalence-demo": cmd_equivalence,
}


def run_scenario(sc: Scenario, out: str | Path, seed: int | None = None, tolerance_scale: float = 1.0) -> Report:
    """Execute the scenario's command and write ``summary.json`` into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(sc.command, sc.seed if seed is None else seed, tolerance_scale)
    start = time.perf_counter()
    try:
        COMMAND_TABLE[sc.command](sc, out, rep, tolerance_scale)
    except CommutationError as exc:
        rep.flag("relaxation", False, str(exc))
    rep.results["elapsed_seconds"] = time.perf_counter() - start
    summary = out / "summary.json"
    rep.files.append(str(summary))
    summary.write_text(json.dumps(rep.to_dict(), indent=2, default=float))
    return rep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="junction-relax", description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument(
        "--tolerance-scale", type=float, default=1.0, help="multiply every check tolerance by this factor"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.tolerance_scale <= 0:
        print("error: --tolerance-scale must be positive", file=sys.stderr)
        return 2
    try:
        scenario = load_scenario(args.scenario)
        report = run_scenario(scenario, args.out, args.seed, args.tolerance_scale)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for c in report.checks:
        mark = "PASS" if c["passed"] else "FAIL"
        extra = f" {c['value']:.3e} {c['relation']} {c['limit']:.1e}" if "value" in c else ""
        print(f"[{mark}] {c['name']}{extra}")
    print(f"summary: {args.out / 'summary.json'}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
