import json
import math

import pytest

from cli import build_parser, parse_and_dispatch, resolve_config
from config import ExitCodes
from report import read_results


def run(argv, capsys):
    code = parse_and_dispatch(argv)
    return code, capsys.readouterr()


def test_density_stdout(capsys):
    code, out = run(["density", "--alpha", "1", "--radii", "1,2"], capsys)
    assert code == ExitCodes.OK
    lines = out.out.splitlines()
    assert lines[0] == "r,j_m,j_0,sigma,tail_mass"
    j0 = float(lines[2].split(",")[2])
    assert j0 == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-14)


def test_tailmass_json(tmp_path, capsys):
    out = tmp_path / "tail.json"
    code, _ = run(["tailmass", "--alpha", "1", "--m", "1", "--radii", "0.01", "--format", "json",
                   "--out", str(out)], capsys)
    assert code == ExitCodes.OK
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["meta"]["command"] == "tailmass"
    assert payload["rows"][0]["tail_mass"] > 0


@pytest.mark.parametrize("argv", [
    [],
    ["no-such-command"],
    ["density", "--alpha", "abc"],
    ["density", "--radii", "1,x"],
    ["verify"],
])
def test_usage_errors(argv, capsys):
    code, _ = run(argv, capsys)
    assert code == ExitCodes.USAGE


def test_help_exits_cleanly(capsys):
    code, out = run(["--help"], capsys)
    assert code == 0
    assert "groundstate" in out.out


def test_domain_error_is_usage(capsys):
    code, _ = run(["density", "--alpha", "2.5"], capsys)
    assert code == ExitCodes.USAGE


def test_missing_lambda(capsys):
    code, out = run(["exit-mgf", "--n", "10"], capsys)
    assert code == ExitCodes.USAGE
    assert "--lambda" in out.err


def test_verify_list(capsys):
    code, out = run(["verify", "list"], capsys)
    assert code == ExitCodes.OK
    assert "brownian-end-to-end" in out.out
    assert "determinism" in out.out


def test_verify_unknown_suite(capsys):
    code, _ = run(["verify", "nothing-here"], capsys)
    assert code == ExitCodes.USAGE


def test_verify_suite(tmp_path, capsys):
    out = tmp_path / "checks.csv"
    code, _ = run(["verify", "tail-asymptotic", "--out", str(out)], capsys)
    assert code == ExitCodes.OK
    table = read_results(out)
    assert table.columns == ["suite", "check", "value", "target", "passed"]
    assert all(row["passed"] is True for row in table.rows)


def test_mc_output_independent_of_workers(tmp_path, capsys):
    outputs = []
    for workers in ("1", "4"):
        out = tmp_path / f"mgf-{workers}.csv"
        code, _ = run(["exit-mgf", "--alpha", "1.5", "--m", "0.5", "--lambda", "0.3", "--n", "400",
                       "--h", "0.01", "--tmax", "10", "--streams", "4", "--workers", workers, "--seed", "77",
                       "--out", str(out)], capsys)
        assert code == ExitCodes.OK
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_seed_env_override(tmp_path, capsys, monkeypatch):
    paths = []
    for seed in ("1", "2"):
        out = tmp_path / f"s{seed}.csv"
        run(["mean-exit", "--n", "200", "--h", "0.01", "--tmax", "10", "--seed", seed, "--out", str(out)], capsys)
        paths.append(out.read_bytes())
    monkeypatch.setenv("FW_SEED", "9")
    overridden = []
    for seed in ("1", "2"):
        out = tmp_path / f"o{seed}.csv"
        run(["mean-exit", "--n", "200", "--h", "0.01", "--tmax", "10", "--seed", seed, "--out", str(out)], capsys)
        overridden.append(out.read_bytes())
    assert paths[0] != paths[1]
    assert overridden[0] == overridden[1]


def test_survival_rows(tmp_path, capsys):
    out = tmp_path / "surv.csv"
    code, _ = run(["survival", "--n", "300", "--h", "0.01", "--tmax", "2", "--t", "0,0.5,2",
                   "--out", str(out)], capsys)
    assert code == ExitCodes.OK
    table = read_results(out)
    assert [row["t"] for row in table.rows] == [0, 0.5, 2]
    assert table.rows[0]["value"] == 1


def test_sample_with_plot(tmp_path, capsys):
    out, plot = tmp_path / "paths.csv", tmp_path / "paths.svg"
    code, _ = run(["sample", "--n", "20", "--h", "0.01", "--tmax", "5", "--out", str(out), "--plot", str(plot)],
                  capsys)
    assert code == ExitCodes.OK
    assert len(read_results(out).rows) == 20
    assert plot.exists()


def test_classical_groundstate(tmp_path, capsys):
    out = tmp_path / "classical.csv"
    code, _ = run(["groundstate", "classical", "--a", "1", "--v", "5", "--radii", "0,1,2", "--out", str(out)],
                  capsys)
    assert code == ExitCodes.OK
    table = read_results(out)
    assert table.rows[0]["phi0"] > table.rows[1]["phi0"] > table.rows[2]["phi0"] > 0
    assert table.meta["header"]["lambda0"] < 0


def test_profile_needs_eigenvalues_in_plane(capsys):
    code, _ = run(["groundstate", "profile", "--d", "2"], capsys)
    assert code == ExitCodes.USAGE


def test_profile_in_plane(tmp_path, capsys):
    out = tmp_path / "profile.json"
    code, _ = run(["groundstate", "profile", "--d", "2", "--lambda0", "4.5", "--lambda-a", "1.5",
                   "--radii", "0,0.5,2", "--format", "json", "--out", str(out)], capsys)
    assert code == ExitCodes.OK
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["meta"]["header"]["lambda0"] == -4.5
    rows = payload["rows"]
    assert rows[0]["lower"] == rows[0]["upper"] == pytest.approx(1.0 + 0.5 / 1.0)


def test_report_round_trip(tmp_path, capsys):
    data = tmp_path / "density.csv"
    run(["density", "--radii", "0.5,1,2", "--out", str(data)], capsys)
    report = tmp_path / "report.txt"
    code, _ = run(["report", str(data), "--out", str(report)], capsys)
    assert code == ExitCodes.OK
    text = report.read_text(encoding="utf-8")
    assert "Rows: 3" in text
    assert "Column: j_0" in text


def test_report_missing_file(tmp_path, capsys):
    code, _ = run(["report", str(tmp_path / "missing.csv")], capsys)
    assert code == ExitCodes.USAGE


def test_config_file_and_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha=0.7\nn=123\n", encoding="utf-8")
    args = build_parser().parse_args(["--config", str(cfg), "mean-exit", "--n", "50"])
    config = resolve_config(args)
    assert config.alpha == 0.7
    assert config.n == 50


def test_exit_mgf_flags_divergence_from_supplied_eigenvalue(tmp_path, capsys):
    out = tmp_path / "mgf.csv"
    code, _ = run(["exit-mgf", "--d", "2", "--alpha", "1", "--m", "1", "--lambda", "2.0", "--lambda-R", "1.5",
                   "--n", "200", "--h", "0.01", "--tmax", "5", "--out", str(out)], capsys)
    assert code == ExitCodes.OK
    assert read_results(out).rows[0]["diverged"] is True


def test_exit_mgf_rejects_nonpositive_eigenvalue(capsys):
    code, out = run(["exit-mgf", "--lambda", "0.5", "--lambda-R", "-1", "--n", "10"], capsys)
    assert code == ExitCodes.USAGE
    assert "--lambda-R" in out.err


def test_exponential_potential_only_for_mc_and_spectral(capsys):
    code, _ = run(["groundstate", "profile", "--potential", "exp"], capsys)
    assert code == ExitCodes.USAGE


def test_exponential_mc_needs_levels(capsys):
    code, out = run(["groundstate", "mc", "--potential", "exp", "--lambda0", "1.0", "--n", "10"], capsys)
    assert code == ExitCodes.USAGE
    assert "--gamma" in out.err


def test_exponential_mc_band(tmp_path, capsys):
    out = tmp_path / "band.csv"
    code, _ = run(["groundstate", "mc", "--potential", "exp", "--v", "2", "--scale", "1", "--gamma", "1.5",
                   "--lambda0", "1.0", "--brownian", "--radii", "0", "--n", "200", "--h", "0.01", "--tmax", "10",
                   "--out", str(out)], capsys)
    assert code == ExitCodes.OK
    table = read_results(out)
    assert table.columns == ["x", "branch", "lower", "full", "upper"]
    row = table.rows[0]
    assert row["branch"] == "inside"
    assert 0 < row["lower"] <= row["upper"]
