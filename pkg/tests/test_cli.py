import csv
import json
import math

import pytest

from psido.cli import Check, UsageError, dispatch, main, parse_run_spec


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def files(tmp_path):
    term = lambda x, xi, re="1": {"x": [x], "xi": [xi], "re": re, "im": "0"}
    return {
        "a": write(tmp_path / "a.json", {"n": 1, "terms": [term(0, 1)]}),
        "b": write(tmp_path / "b.json", {"n": 1, "terms": [term(1, 0)]}),
        "lap": write(tmp_path / "lap.json", {"n": 1, "terms": [term(0, 2, "-1")]}),
        "varying": write(tmp_path / "v.json", {"n": 1, "terms": [term(0, 2, "-1"), term(2, 2, "-1")]}),
        "flat": write(tmp_path / "flat.json", {"n": 3, "metric": "flat"}),
        "torsion": write(
            tmp_path / "torsion.json",
            {"n": 2, "metric": {"christoffel": [[["0", "1"], ["0", "0"]], [["0", "0"], ["0", "0"]]]}},
        ),
    }


# -- parsing -------------------------------------------------------------------


def test_parse_qed_example():
    spec = parse_run_spec(["qed-sweep", "--alpha", "1", "--kmax", "10"], env={})
    assert spec.command == "qed-sweep"
    assert spec.params["alpha"] == [1.0] and spec.params["kmax"] == 10.0
    assert spec.seed == 0


def test_parse_hawking_example():
    spec = parse_run_spec(["hawking", "--mass", "1.0", "--s", "1"], env={})
    assert (spec.params["mass"], spec.params["s"]) == (1.0, 1.0)


def test_missing_geometry_file():
    with pytest.raises(UsageError, match="file not found: missing.json"):
        parse_run_spec(["geometry-check", "--geometry", "missing.json"], env={})


def test_unknown_and_missing_command():
    with pytest.raises(UsageError):
        parse_run_spec(["frobnicate"], env={})
    with pytest.raises(UsageError, match="missing command"):
        parse_run_spec([], env={})


@pytest.mark.parametrize(
    "argv, names",
    [
        (["hawking", "--omega-min", "2", "--omega-max", "1"], ("--omega-min", "--omega-max")),
        (["qed-sweep", "--kmin", "5", "--kmax", "1"], ("--kmin", "--kmax")),
    ],
)
def test_conflicting_flags_name_both(argv, names):
    with pytest.raises(UsageError) as err:
        parse_run_spec(argv, env={})
    assert all(n in str(err.value) for n in names)


def test_parametrix_conflict(files):
    with pytest.raises(UsageError, match="--r0.*--r1"):
        parse_run_spec(["parametrix", "--symbol", files["lap"], "--r0", "3", "--r1", "2"], env={})


def test_output_precedence(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"out": "from-config", "kmax": 5, "seed": 7})
    argv = ["--config", cfg, "qed-sweep"]
    spec = parse_run_spec(argv, env={})
    assert str(spec.out_dir) == "from-config" and spec.params["kmax"] == 5 and spec.seed == 7
    assert str(parse_run_spec(argv, env={"PSIDO_OUT": "env"}).out_dir) == "env"
    spec = parse_run_spec(["--out", "flag", "--seed", "3", "--config", cfg, "qed-sweep", "--kmax", "9"], env={"PSIDO_OUT": "env"})
    assert (str(spec.out_dir), spec.params["kmax"], spec.seed) == ("flag", 9.0, 3)
    assert str(parse_run_spec(["qed-sweep"], env={}).out_dir) == "psido-out"


def test_config_errors(tmp_path):
    bad = write(tmp_path / "bad.json", {"nonsense": 1})
    with pytest.raises(UsageError, match="unknown config keys"):
        parse_run_spec(["--config", bad, "qed-sweep"], env={})
    other = write(tmp_path / "other.json", {"command": "hawking"})
    with pytest.raises(UsageError, match="hawking"):
        parse_run_spec(["--config", other, "qed-sweep"], env={})
    with pytest.raises(UsageError, match="file not found"):
        parse_run_spec(["--config", str(tmp_path / "none.json"), "qed-sweep"], env={})


def test_check_status_follows_tolerance():
    assert Check("a", 1e-9, 1e-8).passed
    assert not Check("a", 2e-8, 1e-8).passed
    assert Check("a", 1e-8, 1e-8).to_dict()["status"] == "pass"


# -- dispatch ------------------------------------------------------------------


def run(argv, tmp_path):
    out = tmp_path / "out"
    code = main(["--out", str(out), *argv])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, out, report


def test_symbol_compose_example(files, tmp_path, capsys):
    code, out, report = run(["symbol-compose", "--a", files["a"], "--b", files["b"], "--order", "1"], tmp_path)
    printed = capsys.readouterr().out.splitlines()
    assert printed[:2] == ["x1*xi1 - i", "exact: true"]
    assert code == 0 and report["status"] == "pass"
    assert json.loads((out / "composition.json").read_text())["n"] == 1


def test_parametrix_constant_symbol(files, tmp_path):
    code, out, report = run(["parametrix", "--symbol", files["lap"], "--grid", "64"], tmp_path)
    assert code == 0
    data = json.loads((out / "remainder.json").read_text())
    assert set(data) == {"tail_norm", "max_highband_residual", "cutoff"}
    assert data["max_highband_residual"] <= 1e-10


def test_parametrix_varying_symbol_reports_only(files, tmp_path):
    code, _, report = run(["parametrix", "--symbol", files["varying"], "--grid", "32"], tmp_path)
    assert code == 0 and report["checks"] == [] and report["metrics"]["mode"] == "frozen"


def test_flat_geometry_residuals_exactly_zero(files, tmp_path):
    code, out, report = run(["geometry-check", "--geometry", files["flat"], "--order", "4", "--points", "3"], tmp_path)
    assert code == 0
    assert all(c["residual"] == 0.0 for c in report["checks"])
    with open(out / "geometry_residuals.csv") as fh:
        assert all(float(r["residual"]) == 0.0 for r in csv.DictReader(fh))


def test_torsion_geometry_passes(files, tmp_path):
    code, _, report = run(["geometry-check", "--geometry", files["torsion"], "--order", "3", "--points", "3"], tmp_path)
    assert code == 0
    names = {c["name"] for c in report["checks"]}
    assert "nabla2_l_half_torsion" in names and "nabla3_l_curvature" not in names


def test_qed_sweep_csv(tmp_path):
    code, out, _ = run(["qed-sweep", "--alpha", "1", "3", "--kmax", "10", "--samples", "5"], tmp_path)
    assert code == 0
    with open(out / "qed_sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10
    assert list(rows[0]) == ["k0", "k1", "k2", "k3", "alpha", "A", "B", "max_identity_residual"]
    assert all(float(r["max_identity_residual"]) <= 1e-12 for r in rows)
    # 17 significant digits
    assert len(rows[0]["A"].split("e")[0].replace("-", "").replace(".", "")) == 17


def test_hawking_density_matches_planck(tmp_path):
    code, out, _ = run(["hawking", "--mass", "1.0", "--s", "1", "--points", "20", "--modes", "3"], tmp_path)
    assert code == 0
    with open(out / "density.csv") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        w = float(r["omega"])
        assert abs(float(r["rho"]) - 2 * math.pi / math.expm1(8 * math.pi * w)) <= 1e-10 * float(r["planck_reference"])
        assert float(r["rel_err"]) <= 1e-10
    with open(out / "spectrum.csv") as fh:
        assert [r["n"] for r in csv.DictReader(fh)] == ["1", "2", "3"]


def test_module_error_is_named(tmp_path, capsys):
    bad = write(tmp_path / "geo.json", {"n": 2, "metric": "klein-bottle"})
    code, _, _ = run(["geometry-check", "--geometry", bad], tmp_path)
    assert code == 2
    assert "connection_geometry" in capsys.readouterr().err


def test_failed_check_sets_exit_code(tmp_path, monkeypatch):
    import psido.cli as cli

    def failing(spec, report):
        report.checks.append(Check("forced", 1.0, 0.5))

    monkeypatch.setitem(cli.RUNNERS, "qed-sweep", ("qed_propagator", failing))
    code, _, report = run(["qed-sweep"], tmp_path)
    assert code == 1 and report["status"] == "fail"


def test_manifest_lists_written_files(files, tmp_path):
    spec = parse_run_spec(["--out", str(tmp_path / "m"), "hawking", "--points", "5", "--modes", "2"], env={})
    report = dispatch(spec)
    assert report.passed
    assert all((spec.out_dir / name).is_file() for name in report.artifacts)
    assert "wall_time" not in json.loads((spec.out_dir / "report.json").read_text())


@pytest.mark.parametrize("command", ["qed-sweep", "geometry-check"])
def test_runs_are_byte_identical(files, tmp_path, command):
    extra = ["--geometry", files["torsion"], "--points", "4"] if command == "geometry-check" else ["--samples", "20"]
    outputs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        assert main(["--out", str(out), command, *extra]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]
