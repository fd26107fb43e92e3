import json
import math
import os
import subprocess

import pytest

import bpre

G2 = [(0.5, {1: 0.5, 2: 0.5}), (0.5, {2: 0.5, 4: 0.5})]


@pytest.fixture
def g2():
    return bpre.EnvironmentLaw(G2)


def test_version():
    assert bpre.__version__.split(".")[0] == "1"


def test_rate_functions(g2):
    assert g2.lbar == pytest.approx(0.5 * math.log(1.5) + 0.5 * math.log(3.0))
    assert bpre.psi(g2, g2.lbar) == pytest.approx(0.0, abs=1e-12)
    c = 0.6
    lam = bpre.lambda_star(g2, c)
    assert bpre.log_mgf(g2, lam) == pytest.approx(c * lam - bpre.psi(g2, c), abs=1e-9)
    closed = bpre.psi_two_env_closed_form(math.log(1.5), math.log(3.0), 0.5, c)
    assert closed == pytest.approx(bpre.psi(g2, c), abs=1e-10)


def test_chi(g2):
    r = bpre.chi(g2, 0.4)
    assert 0.0 < r["t_c"] < 1.0
    assert r["chi"] <= bpre.psi(g2, 0.4)


def test_simulate_is_reproducible(g2):
    a = bpre.simulate(g2, 10, seed=3, replica=7)
    b = bpre.simulate(g2, 10, seed=3, replica=7)
    assert a == b
    z = [int(v) for v in a[0]]
    assert all(x <= y for x, y in zip(z, z[1:]))


def test_oracle_holding_probability(g2):
    for n in range(1, 6):
        probs, _ = bpre.exact_distribution(g2, n, 1, 4)
        assert probs[1] == pytest.approx(0.25**n, rel=1e-12)


def test_estimate_lower_against_oracle(g2):
    exact = bpre.exact_population_tail(g2, 10, 0.4)
    est = bpre.estimate_lower(g2, 10, 0.4, 4000, seed=2)
    assert abs(est["estimate"] - exact) <= 4 * est["std_error"]


def test_errors_carry_codes():
    with pytest.raises(bpre.BpreError) as info:
        bpre.EnvironmentLaw([(1.0, {1: 0.5})])
    assert info.value.args[0] == "MassNotOne"


def test_cell_identity_frozen():
    lhs, se, rhs, z = bpre.cell_identity({1: 1.0}, {1: 1.0}, 6, 0.1, 5)
    assert lhs == rhs == 64.0
    assert z == 0.0


def test_run_command_rate():
    cfg = json.dumps({"environments": [{"weight": w, "pmf": {str(k): p for k, p in pmf.items()}} for w, pmf in G2]})
    out = bpre.run_command("rate", cfg, json.dumps({"c_grid": "0.5,0.6"}))
    lines = out["rate.csv"].splitlines()
    assert lines[0].startswith("#schema=rate/1 config_hash=")
    assert lines[1] == "c,psi,lambda_c,chi,t_c,slope"
    assert len(lines) == 4


@pytest.mark.skipif("BPRE_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_exit_codes(tmp_path):
    cli = os.environ["BPRE_CLI"]
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out"
    r = subprocess.run([cli, "rate", "--config", str(bad), "--out-dir", str(out)], capture_output=True, text=True)
    assert r.returncode == 2
    assert json.loads(r.stderr.strip())["error"] == "ParseError"
    assert not out.exists()

    g2 = os.path.join(os.environ["BPRE_CONFIGS"], "g2.json")
    r = subprocess.run([cli, "oracle", "--config", g2, "--n", "10", "--K", "50", "--cap", "20", "--out-dir", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 3
    assert json.loads(r.stderr.strip())["error"] == "CapTooSmall"

    r = subprocess.run([cli, "simulate", "--config", g2, "--n", "12", "--replicas", "50", "--seed", "4",
                        "--out-dir", str(out)], capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([cli, "reproduce", "--record", str(out / "runs.jsonl"), "--workers", "4"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("PASS")
