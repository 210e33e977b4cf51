import json
import os
import subprocess
import sys

import pytest

from pshe import expcli


def _run(args, env_extra=None, cwd=None):
    env = dict(os.environ)
    env.pop("PSHE_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "pshe.expcli", *args],
                          capture_output=True, text=True, env=env, cwd=cwd)


def test_malformed_toml_exits_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("horizons = [1.0,\n")
    out = tmp_path / "out"
    r = _run(["constants", "--config", str(bad), "--out", str(out)])
    assert r.returncode == expcli.EXIT_CONFIG
    assert not out.exists()


def test_validation_enumerates_all_errors(tmp_path):
    cfgf = tmp_path / "cfg.toml"
    cfgf.write_text('dim = 2\nbeta = -1.0\nbackend = "bogus"\n'
                    'horizons = [2.0, 1.0]\n')
    r = _run(["simulate-z", "--config", str(cfgf), "--out", str(tmp_path / "o")])
    assert r.returncode == expcli.EXIT_CONFIG
    for frag in ("dim", "beta", "backend", "horizons"):
        assert frag in r.stderr


def test_unknown_config_field_rejected(tmp_path):
    cfgf = tmp_path / "cfg.toml"
    cfgf.write_text("not_a_field = 3\n")
    r = _run(["constants", "--config", str(cfgf)])
    assert r.returncode == expcli.EXIT_CONFIG
    assert "not_a_field" in r.stderr


def test_simulate_z_reproducible_bytes(tmp_path):
    cfgf = tmp_path / "cfg.toml"
    cfgf.write_text("n_paths = 16\nhorizons = [0.5]\nreplicas = 5\n"
                    "dt0 = 0.03125\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        r = _run(["simulate-z", "--config", str(cfgf), "--out", str(out),
                  "--seed", "77"])
        assert r.returncode == 0, r.stderr
        outs.append((out / "z_samples.csv").read_bytes())
    assert outs[0] == outs[1]
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 77
    assert man["schema_version"] == "1"
    header = outs[0].decode().splitlines()[0]
    assert header == "replica,backend,beta,T,x0,x1,x2,Z,logZ,diag"


def test_env_override_seed(tmp_path):
    cfgf = tmp_path / "cfg.toml"
    cfgf.write_text("n_paths = 8\nhorizons = [0.5]\nreplicas = 3\n"
                    "dt0 = 0.03125\n")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    r1 = _run(["simulate-z", "--config", str(cfgf), "--out", str(out1)],
              env_extra={"PSHE_SEED": "123"})
    r2 = _run(["simulate-z", "--config", str(cfgf), "--out", str(out2),
               "--seed", "123"])
    assert r1.returncode == 0 and r2.returncode == 0
    assert (out1 / "z_samples.csv").read_bytes() == (out2 / "z_samples.csv").read_bytes()


def test_limit_sample_writes_csv(tmp_path):
    out = tmp_path / "out"
    r = _run(["limit-sample", "--out", str(out), "--replicas", "200",
              "--seed", "5"])
    assert r.returncode == 0, r.stderr
    rows = (out / "limit_samples.csv").read_text().strip().splitlines()
    assert len(rows) == 201
    assert (out / "limit_cov.csv").exists()


def test_stationary_check_subcommand(tmp_path):
    out = tmp_path / "out"
    r = _run(["stationary-check", "--out", str(out), "--scale", "quick"])
    assert r.returncode == 0, r.stderr + r.stdout
    verdicts = json.loads((out / "verdicts.json").read_text())
    names = {v["name"] for v in verdicts}
    assert "11_stationarity_identity" in names
    assert all(v["passed"] for v in verdicts)
    man = json.loads((out / "manifest.json").read_text())
    assert man["all_passed"] is True


def test_path_ceiling_budget_exit(tmp_path):
    cfgf = tmp_path / "cfg.toml"
    cfgf.write_text("n_paths = 64\nhorizons = [0.5]\nreplicas = 50\n"
                    "path_ceiling = 100\n")
    out = tmp_path / "out"
    r = _run(["simulate-z", "--config", str(cfgf), "--out", str(out)])
    assert r.returncode == expcli.EXIT_BUDGET
