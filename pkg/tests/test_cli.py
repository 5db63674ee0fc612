import csv
import json
import math

import pytest

from openasep import cli
from openasep.config import load_config, params_from_mapping
from openasep.errors import ConfigFileError
from openasep.output import fmt, jsonable

FAN_CFG = """[params]
alpha = 0.7
beta = 0.6
gamma = 0.1
q = 0.3
"""


def run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path / "out")])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_stationary_from_config(tmp_path):
    cfg = tmp_path / "fan.cfg"
    cfg.write_text(FAN_CFG)
    assert run(tmp_path, "stationary", "--config", str(cfg), "--n", "6") == 0
    rows = read_csv(tmp_path / "out" / "stationary.csv")
    assert len(rows) == 64
    assert math.fsum(float(r["probability"]) for r in rows) == pytest.approx(1, abs=1e-12)
    meta = json.loads((tmp_path / "out" / "stationary.json").read_text())
    assert meta["seed"] == cli.DEFAULT_SEED and "params" in meta


def test_stationary_rational(tmp_path):
    assert run(tmp_path, "stationary", "--a", "0", "--b", "0", "--n", "3", "--mode", "rational") == 0
    rows = read_csv(tmp_path / "out" / "stationary.csv")
    assert [r["exact"] for r in rows] == ["1/14", "1/14", "1/7", "1/14", "3/14", "1/7", "3/14", "1/14"]


def test_rate_fn_half_row_is_zero(tmp_path):
    assert run(tmp_path, "rate-fn", "--a", "0", "--b", "0", "--line-slopes", "0.1:0.9:0.1", "--grid-k", "40") == 0
    rows = read_csv(tmp_path / "out" / "rate_fn.csv")
    assert len(rows) == 9
    half = [r for r in rows if float(r["rho"]) == 0.5][0]
    assert abs(float(half["I_closed"])) < 1e-12
    assert (tmp_path / "out" / "rate_fn.dat").read_text().startswith("# rho")


def test_scope_exit_code(tmp_path, capsys):
    cfg = tmp_path / "shock.cfg"
    cfg.write_text("[params]\na = 2\nb = 2\n")
    assert run(tmp_path, "stationary", "--config", str(cfg)) == cli.EXIT_SCOPE
    err = capsys.readouterr().err
    assert "ab < 1" in err and len(err.strip().splitlines()) == 1


def test_usage_and_config_exit_codes(tmp_path):
    assert cli.main(["stationary", "--bogus"]) == cli.EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("this is not ini\n")
    assert run(tmp_path, "stationary", "--config", str(bad)) == cli.EXIT_CONFIG
    assert run(tmp_path, "stationary", "--config", str(tmp_path / "missing.cfg")) == cli.EXIT_CONFIG
    assert run(tmp_path, "stationary") == cli.EXIT_CONFIG
    assert run(tmp_path, "stationary", "--a", "0.5", "--alpha", "0.5") == cli.EXIT_DOMAIN
    assert run(tmp_path, "stationary", "--a", "0.5", "--b", "0.5", "--q", "1.5") == cli.EXIT_DOMAIN


def test_byte_identical_reruns(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        assert cli.main(["sample", "--a", "0.5", "--b", "0.5", "--c", "-0.4", "--q", "0.5",
                         "--n", "8", "--samples", "50", "--out", str(d)]) == 0
        outs.append(((d / "samples.csv").read_bytes(), (d / "samples.json").read_bytes()))
    assert outs[0] == outs[1]


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("OPENASEP_N", "3")
    assert run(tmp_path, "stationary", "--a", "0", "--b", "0") == 0
    assert len(read_csv(tmp_path / "out" / "stationary.csv")) == 8


def test_two_layer_and_experiments(tmp_path):
    assert run(tmp_path, "two-layer", "--a", "0.5", "--b", "0.5", "--d", "-0.4", "--q", "0.3", "--n", "5") == 0
    meta = json.loads((tmp_path / "out" / "two_layer.json").read_text())
    assert meta["tv"] < 1e-12
    assert run(tmp_path, "experiments", "--name", "lemma24", "--a", "0.5", "--b", "0.5",
               "--ns", "100,200,400", "--strict") == 0
    assert json.loads((tmp_path / "out" / "lemma24.json").read_text())["ok"]


def test_bridges_command(tmp_path):
    assert run(tmp_path, "bridges", "--instances", "30", "--n", "6", "--strict") == 0
    assert len(read_csv(tmp_path / "out" / "bridges.csv")) == 90


def test_config_parsing(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("[params]\na = 0.5\nb = 0.25\n[profile]\nbreakpoints = 0, 0.5, 1\nvalues = 0, 0.25, 0.5\n[run]\nn = 4\n")
    cfg = load_config(p)
    assert float(cfg.params.b) == 0.25 and cfg.rates is None
    assert cfg.profile == ([0, 0.5, 1], [0, 0.25, 0.5]) and cfg.run == {"n": "4"}
    with pytest.raises(ConfigFileError):
        params_from_mapping({"a": "0.1", "zeta": "1"})
    with pytest.raises(ConfigFileError):
        params_from_mapping({"a": "x", "b": "0"})
    p.write_text("[extra]\nx = 1\n")
    with pytest.raises(ConfigFileError):
        load_config(p)


def test_output_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "true" and fmt(math.inf) == "inf" and fmt(3) == "3"
    assert jsonable({"x": (1, math.inf)}) == {"x": [1, "inf"]}
