"""Batch command-line front end.

Each command runs one pipeline, writes CSV/JSON artifacts to the output
directory, prints a one-line status per check, and exits with 0 only when all
checks pass (1 when a check fails, 2 on errors).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

DEFAULT_OUT = "psido-out"

COMMANDS: dict[str, dict[str, Any]] = {
    "symbol-compose": {"a": None, "b": None, "order": 1},
    "parametrix": {"symbol": None, "r0": 1.0, "r1": 2.0, "grid": 64, "degree": 5},
    "geometry-check": {"geometry": None, "order": 3, "points": 10},
    "qed-sweep": {"alpha": [1.0], "kmax": 10.0, "kmin": 1e-3, "samples": 100},
    "hawking": {"mass": 1.0, "s": 1.0, "omega_min": 0.05, "omega_max": 3.0, "points": 60, "radius": None, "modes": 10},
}
FILE_OPTIONS = {"a", "b", "symbol", "geometry"}


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    command: str
    params: dict
    out_dir: Path
    seed: int = 0


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "residual": self.residual,
            "tolerance": self.tolerance,
        }


@dataclass
class RunReport:
    command: str
    params: dict
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        # wall time stays out of the written report so reruns are byte-identical
        return {
            "command": self.command,
            "params": self.params,
            "checks": [c.to_dict() for c in self.checks],
            "metrics": self.metrics,
            "artifacts": sorted(self.artifacts),
            "status": "pass" if self.passed else "fail",
        }


# -- parsing -------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psido", description="Symbol calculus and spectral checks.")
    p.add_argument("--config", help="JSON file whose keys mirror the command flags")
    p.add_argument("--out", help="output directory (overrides PSIDO_OUT and the config file)")
    p.add_argument("--seed", type=int, help="seed for randomized checks (default 0)")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("symbol-compose", help="compose two polynomial symbols exactly")
    s.add_argument("--a", help="JSON symbol file")
    s.add_argument("--b", help="JSON symbol file")
    s.add_argument("--order", type=int)

    s = sub.add_parser("parametrix", help="cutoff parametrix remainder on a periodic grid")
    s.add_argument("--symbol", help="JSON symbol file")
    s.add_argument("--r0", type=float)
    s.add_argument("--r1", type=float)
    s.add_argument("--grid", type=int)
    s.add_argument("--degree", type=int)

    s = sub.add_parser("geometry-check", help="connection identities at random chart points")
    s.add_argument("--geometry", help="JSON geometry file")
    s.add_argument("--order", type=int)
    s.add_argument("--points", type=int)

    s = sub.add_parser("qed-sweep", help="invert the gauge-field symbol over random momenta")
    s.add_argument("--alpha", type=float, nargs="+")
    s.add_argument("--kmax", type=float)
    s.add_argument("--kmin", type=float)
    s.add_argument("--samples", type=int)

    s = sub.add_parser("hawking", help="radial spectrum and spectral density")
    s.add_argument("--mass", type=float)
    s.add_argument("--s", type=float)
    s.add_argument("--omega-min", dest="omega_min", type=float)
    s.add_argument("--omega-max", dest="omega_max", type=float)
    s.add_argument("--points", type=int)
    s.add_argument("--radius", type=float)
    s.add_argument("--modes", type=int)
    return p


def _read_json(path) -> Any:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"unreadable file {path}: {exc}") from exc


def parse_run_spec(argv: list[str], env: dict | None = None) -> RunSpec:
    env = os.environ if env is None else env
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("invalid arguments") from exc
    if ns.command is None:
        raise UsageError(f"missing command; choose one of {', '.join(COMMANDS)}")
    config = _read_json(ns.config) if ns.config else {}
    if not isinstance(config, dict):
        raise UsageError("config file must hold a JSON object")
    config = {k.replace("-", "_"): v for k, v in config.items()}
    if config.get("command", ns.command) != ns.command:
        raise UsageError(f"config file is for command {config['command']!r}, not {ns.command!r}")

    defaults = COMMANDS[ns.command]
    allowed = set(defaults) | {"command", "out", "seed"}
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys for {ns.command}: {', '.join(unknown)}")
    params = {}
    for key, default in defaults.items():
        flag = getattr(ns, key)
        params[key] = flag if flag is not None else config.get(key, default)
    if isinstance(params.get("alpha"), (int, float)):
        params["alpha"] = [params["alpha"]]

    for key in FILE_OPTIONS & set(params):
        if params[key] is None:
            raise UsageError(f"--{key} is required for {ns.command}")
        if not Path(params[key]).is_file():
            raise UsageError(f"file not found: {params[key]}")
    _check_conflicts(ns.command, params)

    out = ns.out or env.get("PSIDO_OUT") or config.get("out") or DEFAULT_OUT
    seed = ns.seed if ns.seed is not None else int(config.get("seed", 0))
    return RunSpec(ns.command, params, Path(out), seed)


def _check_conflicts(command: str, p: dict) -> None:
    if command == "parametrix":
        if p["r0"] >= p["r1"]:
            raise UsageError(f"conflicting flags --r0 ({p['r0']}) and --r1 ({p['r1']}): need r0 < r1")
        if p["grid"] < 4 or p["grid"] & (p["grid"] - 1):
            raise UsageError("--grid must be a power of two >= 4")
    if command == "hawking":
        if p["omega_min"] >= p["omega_max"]:
            raise UsageError(
                f"conflicting flags --omega-min ({p['omega_min']}) and --omega-max ({p['omega_max']}): need omega-min < omega-max"
            )
        if p["omega_min"] <= 0:
            raise UsageError("--omega-min must be positive")
        if p["points"] < 2 or p["modes"] < 1:
            raise UsageError("--points must be >= 2 and --modes >= 1")
        if p["radius"] is not None and p["radius"] <= 2 * p["mass"]:
            raise UsageError(f"conflicting flags --radius ({p['radius']}) and --mass ({p['mass']}): need radius > 2 mass")
    if command == "qed-sweep":
        if p["kmin"] >= p["kmax"]:
            raise UsageError(f"conflicting flags --kmin ({p['kmin']}) and --kmax ({p['kmax']}): need kmin < kmax")
        if any(a == 0 for a in p["alpha"]):
            raise UsageError("--alpha values must be nonzero")
    if command in ("symbol-compose", "geometry-check") and p["order"] < 0:
        raise UsageError("--order must be >= 0")


# -- artifacts -----------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# -- commands ------------------------------------------------------------------


def _run_symbol_compose(spec: RunSpec, report: RunReport) -> None:
    from .symbols import compose_symbols, is_exact_composition, op_to_symbol, symbol_to_op, PolySymbol

    a = PolySymbol.from_dict(_read_json(spec.params["a"]))
    b = PolySymbol.from_dict(_read_json(spec.params["b"]))
    order = spec.params["order"]
    c = compose_symbols(a, b, order)
    exact = is_exact_composition(a, order)
    print(c)
    print(f"exact: {'true' if exact else 'false'}")
    report.metrics["exact"] = exact
    report.metrics["result"] = str(c)
    if exact:
        oracle = op_to_symbol(symbol_to_op(a) @ symbol_to_op(b))
        # exact comparison: the residual counts mismatched monomials
        diff = oracle - c
        report.checks.append(Check("operator_product_mismatches", float(len(diff.terms)), 0.5))
    path = spec.out_dir / "composition.json"
    write_json(path, c.to_dict())
    report.artifacts.append(path.name)


def _test_function(n: int, grid: int, rng: np.random.Generator):
    from .symbols import GridFunction

    shape = (grid,) * n
    k = np.stack(np.meshgrid(*[np.fft.fftfreq(grid, 1.0 / grid)] * n, indexing="ij"), axis=-1)
    envelope = np.exp(-np.sum(k**2, axis=-1) / 32)
    coeffs = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * envelope
    return GridFunction(np.fft.ifftn(coeffs) * grid**n, (2 * math.pi,) * n)


def _run_parametrix(spec: RunSpec, report: RunReport) -> None:
    from .parametrix import CutoffSpec, cutoff_amplitude, frozen_amplitude, remainder_report
    from .symbols import PolySymbol

    p = PolySymbol.from_dict(_read_json(spec.params["symbol"]))
    cutoff = CutoffSpec(spec.params["r0"], spec.params["r1"], spec.params["degree"])
    f = _test_function(p.n, spec.params["grid"], np.random.default_rng(spec.seed))
    if p.is_x_independent():
        q = cutoff_amplitude(p, cutoff)
    else:
        q = frozen_amplitude(p, cutoff)
    rep = remainder_report(p, q, f)
    if p.is_x_independent():
        report.checks.append(Check("fourier_identity", rep.identity_residual, 1e-10))
        report.checks.append(Check("high_band_remainder", rep.max_highband_residual, 1e-10))
    report.metrics.update(rep.to_dict())
    report.metrics["mode"] = q.mode
    path = spec.out_dir / "remainder.json"
    write_json(path, rep.to_dict())
    report.artifacts.append(path.name)


def _run_geometry_check(spec: RunSpec, report: RunReport) -> None:
    from .geometry import (
        ChartConnection,
        CotangentPoint,
        TensorField,
        covariant_derivative,
        curvature_torsion,
        nabla_l,
        ricci_identity_check,
        build_l_jet,
    )
    from .geometry.connection import K_MAX

    conn = ChartConnection.from_json(_read_json(spec.params["geometry"]))
    K = spec.params["order"]
    if not 2 <= K <= K_MAX:
        raise UsageError(f"--order must be between 2 and {K_MAX} for geometry checks")
    if conn.box is None:
        conn.box = np.array([[-1.0, 1.0]] * conn.n)
    rng = np.random.default_rng(spec.seed)
    pts = conn.random_points(rng, spec.params["points"])
    metric = TensorField(conn.metric.tolist(), "ll", conn) if conn.metric is not None else None
    probe = TensorField([c**2 + c * conn.coords[0] for c in conn.coords], "l", conn)
    worst: dict[str, float] = {}
    rows = []

    def record(name, i, value):
        worst[name] = max(worst.get(name, 0.0), value)
        rows.append([i, name, value])

    for i, x in enumerate(pts):
        x = tuple(float(t) for t in x)
        v = rng.normal(size=conn.n)
        cv = curvature_torsion(conn, x)
        torsion_free = not np.any(np.abs(cv.torsion) > 1e-12)
        record("ricci_identity", i, ricci_identity_check(probe, conn, x))
        if metric is not None:
            record("metric_compatibility", i, float(np.max(np.abs(covariant_derivative(metric, conn, x).components))))
        cp = CotangentPoint(x, tuple(v))
        jet = build_l_jet(cp, conn, K)
        l2 = nabla_l(cp, conn, 2, jet).components
        record("nabla2_l_half_torsion", i, float(np.max(np.abs(l2 - 0.5 * np.einsum("p,pij->ij", v, cv.torsion)))))
        for k in range(2, K + 1):
            lk = nabla_l(cp, conn, k, jet).components
            total = sum(np.transpose(lk, perm) for perm in itertools.permutations(range(k)))
            record(f"permutation_sum_{k}", i, float(np.max(np.abs(total))))
            if k == 3 and torsion_free:
                R = cv.riemann
                expect = np.einsum("p,pijk->ijk", v, R + np.swapaxes(R, 1, 2)) / 3
                record("nabla3_l_curvature", i, float(np.max(np.abs(lk - expect))))
    tolerances = {"ricci_identity": 1e-6, "metric_compatibility": 1e-8, "nabla2_l_half_torsion": 1e-8, "nabla3_l_curvature": 1e-6}
    for name, value in worst.items():
        report.checks.append(Check(name, value, tolerances.get(name, 1e-8)))
    path = spec.out_dir / "geometry_residuals.csv"
    write_csv(path, ["point", "check", "residual"], rows)
    report.artifacts.append(path.name)


def _run_qed_sweep(spec: RunSpec, report: RunReport) -> None:
    from .parametrix import laplacian_kernel_constant
    from .qed import SWEEP_COLUMNS, euclidean_propagator, sweep

    p = spec.params
    rows = sweep(p["alpha"], p["kmax"], p["samples"], np.random.default_rng(spec.seed), p["kmin"])
    report.checks.append(Check("identity_residual", max(r.max_identity_residual for r in rows), 1e-12))
    prop = euclidean_propagator([1.0, 0.0, 0.0, 0.0])[0, 0]
    report.checks.append(Check("propagator_constant", abs(prop + laplacian_kernel_constant(4)) * 4 * math.pi**2, 1e-14))
    path = spec.out_dir / "qed_sweep.csv"
    write_csv(path, SWEEP_COLUMNS, (r.as_list() for r in rows))
    report.artifacts.append(path.name)


def _run_hawking(spec: RunSpec, report: RunReport) -> None:
    from .hawking import (
        RadialEigenproblem,
        SchwarzschildParams,
        density_series,
        planck_reference,
        solve_radial_eigenvalues,
        spectral_density,
    )

    p = spec.params
    params = SchwarzschildParams(p["mass"])
    kappa = params.kappa
    omega = np.linspace(p["omega_min"], p["omega_max"], p["points"])
    rho = kappa * spectral_density(p["s"], omega, kappa)
    ref = planck_reference(p["mass"], omega)
    rel = np.abs(rho - ref) / np.abs(ref)
    if p["s"] == 1:
        report.checks.append(Check("planck_identity", float(np.max(rel)), 1e-10))
    else:
        series = np.array([kappa * density_series(p["s"], w, kappa) for w in omega])
        report.checks.append(Check("geometric_series", float(np.max(np.abs(rho - series) / np.abs(series))), 1e-10))
    path = spec.out_dir / "density.csv"
    write_csv(path, ["omega", "rho", "planck_reference", "rel_err"], zip(omega, rho, ref, rel))
    report.artifacts.append(path.name)

    radius = p["radius"] if p["radius"] is not None else 2 * p["mass"] + 20.0
    spectrum = solve_radial_eigenvalues(RadialEigenproblem(p["mass"], radius, p["modes"]))
    report.metrics["spectrum_fit_spacing"] = spectrum.fit_spacing
    report.metrics["asymptotic_spacing"] = math.pi / (2 * p["mass"])
    flat = solve_radial_eigenvalues(RadialEigenproblem(0.0, radius, p["modes"]))
    expect = np.arange(1, p["modes"] + 1) * math.pi / radius
    report.checks.append(Check("flat_spectrum", float(np.max(np.abs(flat.eigenvalues - expect))), 1e-6))
    path = spec.out_dir / "spectrum.csv"
    write_csv(path, ["n", "lambda"], zip(range(1, p["modes"] + 1), spectrum.eigenvalues))
    report.artifacts.append(path.name)


RUNNERS = {
    "symbol-compose": ("symbol_core", _run_symbol_compose),
    "parametrix": ("parametrix", _run_parametrix),
    "geometry-check": ("connection_geometry", _run_geometry_check),
    "qed-sweep": ("qed_propagator", _run_qed_sweep),
    "hawking": ("hawking_spectrum", _run_hawking),
}


class ModuleError(Exception):
    pass


def dispatch(spec: RunSpec) -> RunReport:
    params = {k: (str(v) if k in FILE_OPTIONS else v) for k, v in spec.params.items()}
    params["seed"] = spec.seed
    report = RunReport(spec.command, params)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    module, runner = RUNNERS[spec.command]
    start = time.perf_counter()
    try:
        runner(spec, report)
    except UsageError:
        raise
    except Exception as exc:
        raise ModuleError(f"{module}: {exc}") from exc
    report.wall_time = time.perf_counter() - start
    report.artifacts.append("report.json")
    write_json(spec.out_dir / "report.json", report.to_dict())
    return report


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_run_spec(argv)
        report = dispatch(spec)
    except (UsageError, ModuleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: residual {c.residual:.3e} (tolerance {c.tolerance:.1e})")
    print(f"artifacts in {spec.out_dir} ({report.wall_time:.2f} s)")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
