import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from posmacro.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVER,
    SIMULATE_COLUMNS,
    parse_config,
    run_command,
)
from posmacro.errors import ConfigError
from posmacro.heterogeneous import from_supply, solve_heterogeneous

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TABLE1_CFG = str(CONFIGS / "table1.cfg")
CRITICAL_CFG = str(CONFIGS / "critical.cfg")

META_SCHEMA = {
    "type": "object",
    "required": ["command", "version", "parameters", "seed", "rng", "tolerances"],
    "properties": {
        "parameters": {"type": "object", "required": [
            "total_supply", "investor_share", "mu_r", "sigma_r", "c", "gamma"]},
        "seed": {"type": "integer"},
        "rng": {"type": "string"},
        "tolerances": {"type": "object", "required": ["tol", "eps_critical"]},
    },
}
HETERO_SCHEMA = {
    "type": "object",
    "required": ["meta", "result"],
    "properties": {
        "meta": META_SCHEMA,
        "result": {
            "type": "object",
            "required": ["S", "S_i", "S_c", "L_c", "y", "corner", "investors_out",
                         "residual_mrs", "residual_clearance"],
            "properties": {
                "S": {"type": "number", "exclusiveMinimum": 0},
                "S_i": {"type": "number", "minimum": 0},
                "S_c": {"type": "number", "minimum": 0},
                "L_c": {"type": "number", "minimum": 0},
                "y": {"type": "number", "exclusiveMinimum": 0},
                "corner": {"type": "boolean"},
                "investors_out": {"type": "boolean"},
                "residual_mrs": {"type": ["number", "null"]},
                "residual_clearance": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
}
HOMO_SCHEMA = {
    "type": "object",
    "required": ["meta", "result"],
    "properties": {
        "meta": META_SCHEMA,
        "result": {
            "type": "object",
            "required": ["W", "S_star", "x_star", "w_star", "y_star", "boundary", "regime",
                         "delta", "residual"],
            "properties": {
                "W": {"type": "number", "exclusiveMinimum": 0},
                "S_star": {"type": "number", "exclusiveMinimum": 0},
                "x_star": {"type": "number", "exclusiveMinimum": 0},
                "y_star": {"type": "number"},
                "delta": {"type": "number"},
                "residual": {"type": "number", "minimum": 0},
                "w_star": {"type": "number", "minimum": 0, "maximum": 1},
                "boundary": {"type": "boolean"},
                "regime": {"enum": ["variance-dominated", "critical", "yield-dominated"]},
            },
            "additionalProperties": False,
        },
    },
}


def run(argv, capsys):
    code = run_command(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_body(text):
    return list(csv.reader(line for line in io.StringIO(text) if not line.startswith("#")))


class TestConfig:
    def test_table1(self):
        cfg = parse_config(Path(TABLE1_CFG).read_bytes())
        assert (cfg.total_supply, cfg.investor_share, cfg.mu_r, cfg.sigma_r, cfg.c, cfg.gamma) == (
            1.2e8, 0.1, 0.05, 0.30, 150.0, 2e6)

    def test_empty_lists_missing(self):
        with pytest.raises(ConfigError) as info:
            parse_config(b"")
        for key in ("total_supply", "investor_share", "mu_r", "sigma_r", "c", "gamma"):
            assert key in str(info.value)

    def test_negative_sigma(self):
        with pytest.raises(ConfigError) as info:
            parse_config(b"# comment\nsigma_r = -0.1\n")
        assert info.value.key == "sigma_r" and info.value.line == 2
        assert "sigma_r" in str(info.value)

    @pytest.mark.parametrize("text, key", [
        ("sigma_R = 0.3", "sigma_R"),
        ("c = abc", "c"),
        ("horizon = 1.5", "horizon"),
        ("return_model = lognormal", "return_model"),
        ("c = 1\nc = 2", "c"),
        ("mu_r = nan", "mu_r"),
    ])
    def test_bad_lines(self, text, key):
        with pytest.raises(ConfigError) as info:
            parse_config(text.encode())
        assert info.value.key == key

    def test_defaults_only_for_non_economic(self):
        base = Path(TABLE1_CFG).read_text()
        lines = [ln for ln in base.splitlines() if not ln.startswith(("horizon", "seed"))]
        cfg = parse_config("\n".join(lines))
        assert cfg.horizon == 10000 and cfg.seed == 0 and cfg.tol == 1e-10

    def test_not_utf8(self):
        with pytest.raises(ConfigError):
            parse_config(b"\xff\xfe")


class TestCommands:
    def test_solve_heterogeneous_json(self, capsys):
        code, out, _ = run(["solve-heterogeneous", "--config", TABLE1_CFG, "--format", "json"],
                           capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        jsonschema.validate(doc, HETERO_SCHEMA)
        eq = solve_heterogeneous(from_supply(1.2e8, 0.1, 2e6, 150.0, 0.05, 0.09))
        assert doc["result"]["S"] == eq.S and doc["result"]["S_c"] == eq.S_c

    def test_solve_homogeneous_json(self, capsys):
        code, out, _ = run(["solve-homogeneous", "--config", TABLE1_CFG, "--format", "json",
                            "--wealth", "1e12"], capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        jsonschema.validate(doc, HOMO_SCHEMA)
        assert doc["result"]["w_star"] == pytest.approx(4 / 9, rel=0.01)

    def test_simulate_csv_columns(self, capsys):
        code, out, _ = run(["simulate", "--config", TABLE1_CFG, "--deterministic", "--steps",
                            "10000", "--format", "csv", "--quiet"], capsys)
        assert code == EXIT_OK
        rows = csv_body(out)
        assert tuple(rows[0]) == SIMULATE_COLUMNS
        assert len(rows) == 10002
        assert "# summary.extinction_time: 104" in out

    def test_sweep_wealth_summary(self, capsys):
        code, out, err = run(["sweep-wealth", "--config", CRITICAL_CFG], capsys)
        assert code == EXIT_OK
        exponent = float(err.strip().splitlines()[-1].split(":")[-1])
        assert exponent == pytest.approx(0.667, abs=0.02)
        assert len(csv_body(out)) == 8

    def test_sweep_delta(self, capsys):
        code, out, _ = run(["sweep-delta", "--config", TABLE1_CFG, "--wealth", "1e10",
                            "--points", "5", "--format", "json", "--quiet"], capsys)
        assert code == EXIT_OK
        S = json.loads(out)["data"]["S_star"]
        assert len(S) == 5 and S == sorted(S, reverse=True)

    def test_ensemble(self, capsys):
        code, out, _ = run(["ensemble", "--config", TABLE1_CFG, "--n-seeds", "3", "--steps",
                            "100", "--format", "json", "--quiet"], capsys)
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["summary"]["n_seeds"] == 3 and len(doc["data"]["seed"]) == 3

    def test_quiet_json_is_clean(self, capsys):
        code, out, err = run(["simulate", "--config", TABLE1_CFG, "--steps", "50", "--format",
                              "json", "--quiet"], capsys)
        assert code == EXIT_OK and err == ""
        doc = json.loads(out)
        assert set(doc["data"]) == set(SIMULATE_COLUMNS)

    def test_precision(self, capsys, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text(Path(TABLE1_CFG).read_text() + "precision = 4\n")
        code, out, _ = run(["solve-heterogeneous", "--config", str(cfg)], capsys)
        assert code == EXIT_OK
        assert csv_body(out)[1][0] == "3.631e+07"

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "out.csv"
        code, out, _ = run(["solve-heterogeneous", "--config", TABLE1_CFG, "--output",
                            str(target)], capsys)
        assert code == EXIT_OK and out == "" and target.read_text().startswith("#")


class TestExitCodes:
    def test_missing_config_file(self, capsys):
        assert run(["simulate", "--config", "/no/such.cfg"], capsys)[0] == EXIT_IO

    def test_unwritable_output(self, capsys):
        code = run(["solve-heterogeneous", "--config", TABLE1_CFG, "--output",
                    "/no/such/dir/out.csv"], capsys)[0]
        assert code == EXIT_IO

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sigma_r = -0.1\n")
        code, out, err = run(["simulate", "--config", str(cfg)], capsys)
        assert code == EXIT_CONFIG and out == "" and "sigma_r" in err

    def test_unknown_command(self, capsys):
        assert run(["bogus"], capsys)[0] == EXIT_CONFIG

    def test_solver_error(self, capsys, tmp_path):
        cfg = tmp_path / "fees.cfg"
        cfg.write_text(Path(TABLE1_CFG).read_text() + "mu_F = 1\nsigma_F = 1e6\n")
        code, out, err = run(["solve-homogeneous", "--config", str(cfg), "--wealth", "1e6"],
                             capsys)
        assert code == EXIT_SOLVER and out == "" and "solver error" in err


def test_module_entry_point_byte_identical():
    cmd = [sys.executable, "-m", "posmacro", "simulate", "--config", TABLE1_CFG, "--steps",
           "300", "--seed", "5", "--quiet"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"# command")
