import json
import subprocess
import sys
from pathlib import Path

import pytest

from geosub.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys, environ=None):
    code = main(argv, environ=environ or {})
    out, err = capsys.readouterr()
    return code, out, err


def test_gcp_pmf(capsys):
    code, out, _ = run(["pmf", "--process", "gcp", "--mu", "1", "--t", "1", "--k-max", "3"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "k,pmf,diagnostic"
    assert [float(l.split(",")[1]) for l in lines[1:]] == [0.5, 0.25, 0.125, 0.0625]


def test_gspp_pmf_full_precision(capsys):
    code, out, _ = run(["pmf", "--family", "stable", "--alpha", "0.7", "--lambda", "0.5", "--k-max", "1", "--format",
                        "json"], capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[0]["pmf"] == pytest.approx(0.685087118040887, rel=1e-12)


def test_csv_uses_17_significant_digits(capsys):
    _, out, _ = run(["reliability", "--t", "1"], capsys)
    value = out.strip().splitlines()[1].split(",")[1]
    assert value == format(float(value), ".17g")
    assert float(value) == 0.7221947610429758


def test_moments(capsys):
    code, out, _ = run(["moments", "--family", "tempered_stable", "--alpha", "0.6", "--nu", "1", "--t", "2",
                        "--format", "json"], capsys)
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["mean_t"] == pytest.approx(1.2)


def test_sweep_matches_golden(capsys):
    code, out, _ = run(["sweep", "--parameter", "alpha", "--values", "0.4,0.6,0.8", "--t-grid",
                        "0,0.5,1,2,3,4,5,7.5,10"], capsys)
    assert code == 0
    assert out == (GOLDEN / "sweep_alpha_reliability.csv").read_text()


def test_sweep_with_mc_matches_golden(capsys):
    code, out, _ = run(["sweep", "--parameter", "q", "--values", "0.5,0.7,0.9", "--t-grid", "0.5,1,2,4", "--mc-n",
                        "5000", "--seed", "12345"], capsys)
    assert code == 0
    assert out == (GOLDEN / "sweep_q_reliability_mc.csv").read_text()


def test_config_round_trip(tmp_path, capsys):
    first = tmp_path / "a.csv"
    code, _, _ = run(["pmf", "--family", "gamma", "--p", "2", "--beta", "1.5", "--lambda", "0.8", "--mu", "2",
                      "--t", "0.7", "--k-max", "6", "--out", str(first)], capsys)
    assert code == 0
    second = tmp_path / "b.csv"
    code, _, _ = run(["pmf", "--config", str(first) + ".config.json", "--out", str(second)], capsys)
    assert code == 0
    assert first.read_text() == second.read_text()


def test_flags_override_config_and_env(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"process": "gcp", "mu": 3.0, "t": 1.0, "k_max": 0}))
    _, out, _ = run(["pmf", "--config", str(cfg)], capsys)
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(0.25)
    _, out, _ = run(["pmf", "--config", str(cfg)], capsys, environ={"GEOSUB_MU": "1"})
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(0.5)
    _, out, _ = run(["pmf", "--config", str(cfg), "--mu", "4"], capsys, environ={"GEOSUB_MU": "1"})
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(0.2)


@pytest.mark.parametrize(
    "argv,code,err_code",
    [
        (["pmf", "--family", "stable", "--alpha", "1.5"], 2, "parameter_out_of_range"),
        (["pmf", "--family", "cauchy"], 2, "unknown_family"),
        (["pmf", "--process", "gscpp"], 2, "parameter_out_of_range"),
        (["moments", "--family", "stable", "--t", "-1"], 2, "parameter_out_of_range"),
    ],
)
def test_errors_are_json(argv, code, err_code, capsys):
    got, out, err = run(argv, capsys)
    assert got == code
    payload = json.loads(err)
    assert payload["error"]["code"] == err_code
    assert payload["error"]["message"]


def test_convergence_error_carries_diagnostics(capsys):
    code, _, err = run(["pmf", "--process", "spp", "--family", "stable", "--alpha", "0.6", "--t", "25", "--k-max", "3",
                        "--max-terms", "20"], capsys)
    assert code == 4
    payload = json.loads(err)["error"]
    assert payload["code"] == "convergence"
    assert "n_terms" in payload


def test_compound_pmf_with_jump_file(tmp_path, capsys):
    jumps = tmp_path / "j.json"
    jumps.write_text(json.dumps({"kind": "discrete", "pmf": [0.0, 1.0]}))
    _, a, _ = run(["pmf", "--process", "gscpp", "--jumps", str(jumps), "--family", "tempered_stable", "--alpha",
                   "0.6", "--nu", "1", "--k-max", "4"], capsys)
    _, b, _ = run(["pmf", "--family", "tempered_stable", "--alpha", "0.6", "--nu", "1", "--k-max", "4"], capsys)
    pa = [float(l.split(",")[1]) for l in a.strip().splitlines()[1:]]
    pb = [float(l.split(",")[1]) for l in b.strip().splitlines()[1:]]
    assert pa == pytest.approx(pb, abs=1e-12)


def test_simulate_is_seeded(tmp_path, capsys):
    argv = ["simulate", "--family", "tempered_stable", "--alpha", "0.6", "--nu", "1", "--n", "2000", "--seed", "9"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    code, _, _ = run(argv + ["--out", str(tmp_path / "s.csv")], capsys)
    assert code == 0 and (tmp_path / "s.csv.config.json").exists()


def test_reliability_cumulative(capsys):
    code, out, _ = run(["reliability", "--threshold", "1", "--t", "1", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["rows"][0]["reliability"] == pytest.approx(1 / (2 - 2.718281828459045**-1), rel=1e-12)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "geosub", "pmf", "--process", "gcp", "--k-max", "1"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[1] == "0,0.5,closed_form"


def test_region_error_exit_code(monkeypatch, capsys):
    import geosub.cli as cli
    from geosub.errors import RegionError

    def boom(cfg):
        raise RegionError("outside the series region")

    monkeypatch.setitem(cli.COMMANDS, "pmf", boom)
    code, _, err = run(["pmf"], capsys)
    assert code == 3
    assert json.loads(err)["error"]["code"] == "validity_region"


def test_spp_series_diagnostics(capsys):
    _, out, _ = run(["pmf", "--process", "spp", "--family", "stable", "--alpha", "0.6", "--t", "25", "--k-max", "2"],
                    capsys)
    assert "digits=" in out.strip().splitlines()[-1]
