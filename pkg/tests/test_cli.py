"""Config parsing, suite execution, artifact determinism, exit codes."""

import json
from pathlib import Path

import pytest

from nlsbound.cli import ConfigError, load_config, main

GOOD = """
[params]
n_dim = 1
p = 4.0
rho = 2.0

[potential]
form = gaussian
amplitude = 0.01
rate = 0.5
q = inf

[suite]
name = verify-all

[output]
dir = {out}
"""


def write_cfg(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_config_roundtrip(tmp_path):
    path = write_cfg(tmp_path, GOOD.format(out=tmp_path / "out"))
    cfg = load_config(path)
    assert cfg.params.n_dim == 1 and cfg.params.rho == 2.0
    assert cfg.potential.form == "gaussian"
    assert cfg.suite == "verify-all"
    assert len(cfg.config_hash) == 16


def test_malformed_config_exit_code(tmp_path, capsys):
    path = write_cfg(tmp_path, "[params]\nn_dim = one\np = 4.0\n[suite]\nname = solve\n")
    rc = main(["solve", "--config", str(path)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_missing_required_key(tmp_path):
    path = write_cfg(tmp_path, "[params]\nn_dim = 2\n")
    with pytest.raises(ConfigError):
        load_config(path, suite="solve")


def test_bad_p_window(tmp_path):
    path = write_cfg(tmp_path, "[params]\nn_dim = 2\np = 5.0\n[suite]\nname = solve\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_inadmissible_q(tmp_path):
    text = ("[params]\nn_dim = 2\np = 3.0\n"
            "[potential]\nform = gaussian\namplitude = 0.1\nq = 1.0\n"
            "[suite]\nname = solve\n")
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, text))


def test_unknown_suite(tmp_path):
    path = write_cfg(tmp_path, "[params]\nn_dim = 1\np = 4.0\n[suite]\nname = magic\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_verify_all_runs_and_is_deterministic(tmp_path):
    out1 = tmp_path / "out1"
    out2 = tmp_path / "out2"
    path = write_cfg(tmp_path, GOOD.format(out=out1))
    rc = main(["verify-all", "--config", str(path)])
    assert rc == 0
    rc2 = main(["verify-all", "--config", str(path), "--out", str(out2)])
    assert rc2 == 0
    a = (out1 / "reports.jsonl").read_bytes()
    b = (out2 / "reports.jsonl").read_bytes()
    assert a == b
    assert (out1 / "profile.csv").read_bytes() == (out2 / "profile.csv").read_bytes()
    # every record embeds the config hash and the tolerance scale
    for line in a.decode().strip().splitlines():
        rec = json.loads(line)
        assert "config_hash" in rec and "tol_scale" in rec


def test_ground_state_suite_artifacts(tmp_path):
    out = tmp_path / "gs"
    text = GOOD.format(out=out).replace("verify-all", "ground-state")
    rc = main(["ground-state", "--config", str(write_cfg(tmp_path, text))])
    assert rc == 0
    assert (out / "profile.txt").exists()
    assert (out / "profile.csv").exists()
    recs = [json.loads(x) for x in (out / "reports.jsonl").read_text().splitlines()]
    kinds = {r["kind"] for r in recs}
    assert "ground_state" in kinds and "check" in kinds


def test_tol_scale_flag(tmp_path):
    out = tmp_path / "ts"
    text = GOOD.format(out=out).replace("verify-all", "ground-state")
    path = write_cfg(tmp_path, text)
    rc = main(["ground-state", "--config", str(path), "--tol-scale", "100.0"])
    assert rc == 0


def test_one_dim_requires_1d(tmp_path):
    text = ("[params]\nn_dim = 2\np = 3.0\n[suite]\nname = one-dim\n"
            f"[output]\ndir = {tmp_path / 'o'}\n")
    rc = main(["one-dim", "--config", str(write_cfg(tmp_path, text))])
    assert rc == 2


def test_interaction_threads_determinism(tmp_path):
    text = ("[params]\nn_dim = 2\np = 3.0\nrho = 1.0\n"
            "[suite]\nname = interaction\n"
            "[sweep]\nr_values = 12 16 20\nt_value = 0.3\n"
            f"[output]\ndir = {tmp_path / 'i1'}\n")
    path = write_cfg(tmp_path, text, name="int.ini")
    rc1 = main(["interaction", "--config", str(path), "--threads", "1"])
    rc2 = main(["interaction", "--config", str(path), "--threads", "2",
                "--out", str(tmp_path / "i2")])
    assert rc1 == 0 and rc2 == 0
    a = (tmp_path / "i1" / "interaction.csv").read_bytes()
    b = (tmp_path / "i2" / "interaction.csv").read_bytes()
    assert a == b
