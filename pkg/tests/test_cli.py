import csv
import io
import json
import subprocess
import sys

import pytest

from doobgls.cli import main
from doobgls.config import ConfigError, RunConfig, parse_grid, parse_psi, parse_tail
from doobgls.gls import DeltaBetaTransform, NaturalOf, NuGamma
from doobgls.reporting import dumps, fmt_float
from doobgls.tail_model import Exponential, PowerLog, Scaled, SlowlyVarying


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- config vocabulary ------------------------------------------------------

def test_tail_round_trip():
    for T in (Exponential(), PowerLog(3.0, 1.0, SlowlyVarying(2.0)), Scaled(Exponential(), 4.0)):
        assert parse_tail(T.to_config()) == T
    assert parse_tail("Exponential") == Exponential()


def test_psi_parsing():
    assert parse_psi({"kind": "NuGamma", "params": {"gamma": 2}}) == NuGamma(2.0)
    assert parse_psi("Natural", tail=Exponential()) == NaturalOf(Exponential())
    psi = parse_psi({"kind": "DeltaBeta", "params": {"inner": "Subgaussian", "delta": 1, "beta": 2}})
    assert isinstance(psi, DeltaBetaTransform)
    with pytest.raises(ConfigError):
        parse_psi("Natural")


def test_unknown_things_rejected():
    with pytest.raises(ConfigError):
        parse_tail("Cauchy")
    with pytest.raises(ConfigError):
        parse_tail({"kind": "Exponential", "params": {"rate": 2}})
    with pytest.raises(ConfigError):
        parse_tail({"kind": "Exponential", "extra": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"tial": "Exponential"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"quadrature": {"rtol": 1e-6, "order": 3}})


def test_grid_specs():
    assert parse_grid({"linspace": [1, 2, 3]}).tolist() == [1.0, 1.5, 2.0]
    assert parse_grid([1, 4]).tolist() == [1.0, 4.0]
    with pytest.raises(ConfigError):
        parse_grid([])
    with pytest.raises(ConfigError):
        parse_grid({"geomspace": [0, 1, 3]})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"t_grid": [1, float("nan")]})


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"beta": -1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"coupling": "independent"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"seed": -3})


def test_float_format():
    assert fmt_float(1 / 3) == 0.333333333
    assert fmt_float(float("inf")) == "inf"
    assert dumps({"a": 2 ** 0.5}) == '{\n  "a": 1.41421356\n}\n'


# -- subcommands ------------------------------------------------------------

def test_moment_rows(capsys):
    code, out, _ = run(capsys, "moment", "--p", "1", "2")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[0]["p"] == 1.0 and rows[0]["norm"] == pytest.approx(1.0)
    assert rows[1]["norm"] == pytest.approx(1.4142136, rel=1e-7)


def test_moment_divergent_and_domain(capsys):
    code, out, _ = run(capsys, "moment", "--tail", '{"kind":"PowerLog","params":{"beta":2}}', "--p", "2")
    assert code == 3 and json.loads(out)["rows"][0]["divergent"] is True
    code, _, err = run(capsys, "moment", "--p", "0.5")
    assert code == 2 and "error" in err


def test_moment_csv(capsys):
    code, out, _ = run(capsys, "moment", "--p", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows == [["p", "norm", "divergent"], ["2.0", "1.41421356", "False"]]


def test_doob_bound(capsys):
    code, out, _ = run(capsys, "doob-bound", "--p", "2")
    rec = json.loads(out)
    assert code == 0 and rec["schema"] == "1"
    assert rec["closed_form"] == pytest.approx(2.8284271, rel=1e-7)
    assert rec["bound"] == pytest.approx(2.8284271, rel=0.02)
    code, out, _ = run(capsys, "doob-bound", "--p", "2", "--d", "3")
    assert json.loads(out)["multivariate_bound"] == pytest.approx(4.8989795, rel=1e-7)
    code, _, _ = run(capsys, "doob-bound", "--p", "0.5")
    assert code == 2


def test_gls_actions(capsys):
    code, out, _ = run(capsys, "gls", "--psi", "Natural")
    assert code == 0 and json.loads(out)["norm"] == pytest.approx(1.0, abs=1e-6)
    code, out, _ = run(capsys, "gls", "--psi", '{"kind":"NuGamma","params":{"gamma":1}}', "--action", "tail-bound",
                       "--t", "2.718281828459045")
    assert code == 0 and json.loads(out)["rows"][0]["bound"] == pytest.approx(0.6065307, rel=1e-7)
    code, out, _ = run(capsys, "gls", "--psi", "Subgaussian")
    assert code == 3 and json.loads(out)["status"] == "divergent"
    code, out, _ = run(capsys, "gls", "--action", "natural", "--p", "2")
    assert code == 0 and json.loads(out)["rows"][0]["psi"] == pytest.approx(2 ** 0.5)


def test_sharpness(capsys):
    code, out, _ = run(capsys, "sharpness", "--Delta", "1", "--p-max", "100")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["p", "Y"] and float(rows[-1][1]) == pytest.approx(0.99, abs=1e-9)
    code, out, _ = run(capsys, "sharpness", "--Delta", "2", "--p-max", "1000")
    assert float(out.strip().splitlines()[-1].split(",")[1]) == pytest.approx(0.998, abs=1e-9)
    code, out, _ = run(capsys, "sharpness", "--Delta", "2", "--p-max", "1000", "--format", "json")
    assert json.loads(out)["admissibility"]["divergent"] is True


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--n", "200000", "--seed", "5")
    assert code == 0 and json.loads(out)["hypothesis"]["n_violations"] == 0
    code, out, _ = run(capsys, "verify", "--n", "200000", "--Delta", "2")
    assert code == 4
    code, out, _ = run(capsys, "verify", "--n", "200000", "--p", "2", "--bound", "1.0")
    assert code == 4 and json.loads(out)["bound_check"]["holds"] is False


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"schema": "1", "tail": "Exponential", "p": [3], "Delta": 1.5, "seed": 7}))
    code, out, _ = run(capsys, "doob-bound", "--config", str(cfg))
    assert code == 0 and json.loads(out)["Delta_or_h"] == 1.5
    code, out, _ = run(capsys, "doob-bound", "--config", str(cfg), "--Delta", "1")
    assert json.loads(out)["Delta_or_h"] == 1.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tial": "Exponential"}))
    assert run(capsys, "moment", "--config", str(bad))[0] == 2


def test_out_file_and_byte_identical_reports(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "verify", "--n", "50000", "--seed", "11", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_tolerance_flag(capsys):
    code, out, _ = run(capsys, "moment", "--p", "3", "--tolerance", "1e-10")
    assert code == 0 and json.loads(out)["rows"][0]["norm"] == pytest.approx(6 ** (1 / 3), rel=5e-9)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "doobgls", "moment", "--p", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["schema"] == "1"
