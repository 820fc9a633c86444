import subprocess
import sys

import pytest

from gradflux.cli import ExperimentManifest, build_parser, load_manifest, main


def body(path):
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def test_manifest_defaults_and_header():
    m = ExperimentManifest("energy-bound")
    lines = m.header_lines()
    assert lines[0] == "# gradflux manifest v1"
    assert "# seed = 0" in lines and "# t_grid = 0.5,1.0,1.5,2.0" in lines


def test_config_sections_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 3\nd = 3\n[run]\nL = 6\n[tail-scan]\nL = 8\nt_grid = 1, 2\n")
    m = load_manifest("tail-scan", cfg)
    assert (m.seed, m.d, m.L, m.t_grid) == (3, 3, 8, [1.0, 2.0])
    m = load_manifest("variance-scan", cfg, {"seed": 5, "L": None})
    assert (m.seed, m.L) == (5, 6)


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        load_manifest("verify", cfg)


def test_burn_in_auto():
    assert load_manifest("tail-scan", overrides={"burn_in": "auto"}).burn_in is None
    assert load_manifest("tail-scan", overrides={"burn_in": "50"}).burn_in == 50


def test_parser_subcommands():
    p = build_parser()
    a = p.parse_args(["tail-scan", "--d", "3", "--t-grid", "1,2", "--burn-in", "10"])
    assert a.subcommand == "tail-scan" and a.d == 3 and a.t_grid == "1,2"
    with pytest.raises(SystemExit):
        p.parse_args(["plot"])


def test_energy_bound_csv_is_deterministic(tmp_path):
    args = ["energy-bound", "--d", "3", "--L", "2", "--potential", "power_plus_quadratic",
            "--p", "4", "--t-grid", "4,8", "--l", "20"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "energy_bound.csv").read_text()
    b = (tmp_path / "b" / "energy_bound.csv").read_text()
    assert a == b
    rows = body(tmp_path / "a" / "energy_bound.csv")
    assert rows[0] == "t,value,exponent_fit,residual,D_torus"
    assert len(rows) == 3


def test_variance_scan_small(tmp_path):
    args = ["variance-scan", "--d", "2", "--L", "2", "--potential", "quadratic",
            "--chains", "2", "--samples", "16000", "--seed", "4", "--out", str(tmp_path)]
    assert main(args) == 0
    text = (tmp_path / "variance_scan.csv").read_text()
    assert "fitted C" in text
    rows = body(tmp_path / "variance_scan.csv")
    assert rows[0] == "vertex,l1,variance,se,batches,var_over_log"
    assert len(rows) == 3


def test_tail_scan_small(tmp_path):
    args = ["tail-scan", "--d", "3", "--L", "2", "--potential", "power_plus_quadratic",
            "--p", "4", "--chains", "2", "--samples", "16000", "--seed", "1",
            "--t-grid", "0.5,1", "--out", str(tmp_path)]
    code = main(args)
    rows = body(tmp_path / "tail_scan.csv")
    assert rows[0] == "t,empirical,se,bound,flag"
    flags = [r.split(",")[-1] for r in rows[1:]]
    assert code == (1 if "1" in flags else 0)


def test_usage_errors(tmp_path):
    assert main(["tail-scan", "--d", "2", "--out", str(tmp_path)]) == 2
    assert main(["tail-scan", "--d", "3", "--potential", "power", "--out", str(tmp_path)]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_verify_isoperimetry_subprocess(tmp_path):
    res = subprocess.run([sys.executable, "-m", "gradflux.cli", "verify", "isoperimetry",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
    assert "PASS suite=isoperimetry" in res.stdout
    assert body(tmp_path / "verify.csv")[0] == "suite,check,instance,passed,lhs,rhs,tolerance"
