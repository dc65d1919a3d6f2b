"""Command-line interface: outputs, presets, exit codes, config round-trip."""

import csv
import json

import numpy as np
import pytest

from swirlgas.cli import main
from swirlgas.fields import SolutionParams, ScaleState, eval_flow_arrays


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_csv_and_roundtrip(tmp_path, capsys):
    out = tmp_path / "field.csv"
    code, _, _ = run_cli(["eval", "--preset", "generic-smooth", "--time", "0",
                          "--grid-n", "5", "--grid-extent", "1.0",
                          "--out", str(out), "--format", "csv"], capsys)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "rho", "u1", "u2", "p"]
    data = {(r[0], r[1]): [float(v) for v in r[2:]] for r in rows[1:]}
    # The origin row carries rho = alpha^(1/(gamma-1))/a0^2 = 1.
    origin = data[("0.0", "0.0")]
    assert origin[0] == 1.0 and origin[1] == 0.0 and origin[2] == 0.0
    # Full-precision round trip: re-reading reproduces in-memory values
    # bitwise (recomputed through the same vectorized path).
    p = SolutionParams(gamma=1.4, K=1, xi=0.7, lam=0.9, alpha=1, a0=1, a1=0.3)
    st = ScaleState(t=0.0, a=1.0, adot=0.3)
    body = rows[1:]
    xs = np.array([float(r[0]) for r in body])
    ys = np.array([float(r[1]) for r in body])
    rho, u1, u2, pres = eval_flow_arrays(p, st, xs, ys)
    parsed = np.array([[float(v) for v in r[2:]] for r in body])
    assert np.array_equal(parsed, np.column_stack([rho, u1, u2, pres]))


def test_eval_fixture_values(capsys):
    code, out, _ = run_cli(["eval", "--preset", "zhang-zheng", "--time", "0",
                            "--grid-n", "5", "--grid-extent", "2.0",
                            "--format", "csv"], capsys)
    assert code == 0
    rows = {(r[0], r[1]): [float(v) for v in r[2:]]
            for r in csv.reader(out.splitlines()[1:])}
    rho, u1, u2, _ = rows[("2.0", "0.0")]
    assert (rho, u1, u2) == (0.5, 1.0, -1.0)


def test_classify_presets(capsys):
    expected = {
        "periodic-demo": ("1", "time-periodic"),
        "blowup-demo": ("2b-blowup", "finite-time-blowup"),
        "gamma3-critical": ("3bI-global", "global"),
        "linear-blowup-demo": ("2aII", "finite-time-blowup"),
    }
    for preset, (branch, kind) in expected.items():
        code, out, _ = run_cli(["classify", "--preset", preset], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["branch"] == branch
        assert rep["kind"] == kind


def test_classify_with_certification(capsys):
    code, out, _ = run_cli(["classify", "--preset", "blowup-demo", "--certify",
                            "--horizon", "5"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["certification"]["passed"] is True
    assert abs(rep["certification"]["checks"]["event_time"] - 1.0) <= 1e-6


def test_period_report(capsys):
    code, out, _ = run_cli(["period", "--preset", "periodic-demo"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["period"] == pytest.approx(2.4183991523, rel=1e-9)
    assert rep["quad_error"] <= 1e-9


def test_period_degenerate_orbit_exit_code(capsys):
    code, _, err = run_cli(["period", "--gamma", "1.5", "--K", "1", "--xi", "1",
                            "--lam", "-2", "--alpha", "1", "--a0", "0.5",
                            "--a1", "0"], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "DegenerateOrbit"


def test_integrate_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = run_cli(["integrate", "--preset", "gamma2-oracle",
                          "--t-end", "2.0", "--out", str(out),
                          "--format", "csv"], capsys)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "a", "adot", "E", "F_kin", "F_pot"]
    last = [float(v) for v in rows[-1]]
    assert last[0] == pytest.approx(2.0, abs=1e-12)
    assert last[1] == pytest.approx(np.sqrt(5.0), abs=1e-8)


def test_integrate_json_terminal(capsys):
    code, out, _ = run_cli(["integrate", "--preset", "blowup-demo",
                            "--t-end", "2.0", "--format", "json"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["terminal"]["kind"] == "collapsed"
    assert abs(rep["terminal"]["t"] - 1.0) <= 1e-6


def test_verify_generic_passes(capsys):
    code, out, _ = run_cli(["verify", "--preset", "generic-smooth"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "PASS"
    assert rep["max_normalized"] <= 1e-6


def test_verify_fixture_extras(capsys):
    code, out, _ = run_cli(["verify", "--preset", "zhang-zheng",
                            "--mass-sweep", "2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["fixture_direct"]["max_normalized"] <= 1e-7
    assert rep["embedding_match"]["density_max_diff"] <= 1e-12
    assert rep["embedding_match"]["speed_max_diff"] <= 1e-12
    assert rep["mass_sweep"]["max"] <= 1e-6
    assert rep["verdict"] == "PASS"


def test_verify_viscous_block(capsys):
    # Coarse spatial h keeps the second-difference rounding noise of the
    # viscous term far below the bound; h_t stays fine for the residual.
    code, out, _ = run_cli(["verify", "--preset", "generic-smooth",
                            "--mu", "3.7", "--h", "0.01", "--h-t", "0.0005"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["viscous"]["viscous_term_normalized"] <= 1e-10
    assert rep["viscous"]["max_difference"] <= 1e-10


def test_verify3d_isotropic(capsys):
    code, out, _ = run_cli(["verify3d", "--mode", "isotropic"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "PASS"
    case = rep["cases"]["isotropic"]
    assert case["residual"]["verdict"] == "PASS"
    assert 1.8 <= case["convergence"]["order"] <= 4.2


def test_fvbench_small(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code, _, _ = run_cli(["fvbench", "--preset", "generic-smooth",
                          "--resolutions", "16,32", "--horizon", "0.05",
                          "--out", str(out), "--format", "csv"], capsys)
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "resolution"
    assert len(rows) == 3
    assert float(rows[2][1]) < float(rows[1][1])  # L1 error decreases


def test_config_roundtrip(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    code, out1, _ = run_cli(["classify", "--preset", "gamma3-critical",
                             "--emit-config", str(cfg_path)], capsys)
    assert code == 0
    code, out2, _ = run_cli(["classify", "--config", str(cfg_path)], capsys)
    assert code == 0
    assert json.loads(out1) == json.loads(out2)


def test_verify_config_roundtrip(tmp_path, capsys):
    cfg_path = tmp_path / "verify.json"
    code, out1, _ = run_cli(["verify", "--preset", "generic-smooth",
                             "--h", "0.002", "--r-hi", "1.5",
                             "--emit-config", str(cfg_path)], capsys)
    assert code == 0
    code, out2, _ = run_cli(["verify", "--config", str(cfg_path)], capsys)
    assert code == 0
    assert json.loads(out1) == json.loads(out2)


def test_flag_overrides_config(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    run_cli(["classify", "--preset", "blowup-demo", "--emit-config", str(cfg_path)], capsys)
    code, out, _ = run_cli(["classify", "--config", str(cfg_path),
                            "--a1", "1.0"], capsys)
    assert code == 0
    assert json.loads(out)["branch"] == "2b-global"  # rate at the threshold


def test_missing_params_is_domain_error(capsys):
    code, _, err = run_cli(["classify"], capsys)
    assert code == 1
    assert "error" in json.loads(err)


def test_invalid_params_error_payload(capsys):
    code, _, err = run_cli(["classify", "--preset", "blowup-demo",
                            "--gamma", "0.5"], capsys)
    assert code == 1
    payload = json.loads(err)
    assert payload["error"] == "InvalidParams"
    assert "NonPositiveGammaMargin" in payload["violations"]


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--preset", "no-such-preset"])
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_io_error_exit_two(tmp_path, capsys):
    code, _, err = run_cli(["classify", "--preset", "blowup-demo",
                            "--out", str(tmp_path / "no" / "dir" / "x.json")], capsys)
    assert code == 2
    assert json.loads(err)["error"] == "io"
