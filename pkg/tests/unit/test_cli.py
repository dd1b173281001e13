"""
Unit tests for the qrom command-line runner.
"""

import json
from unittest.mock import patch

import pytest

from qrom_lib.config import get_settings
from scripts.qrom_cli import main


def _bound_row(output):
    header, values = output.strip().splitlines()[-2:]
    return dict(zip(header.split(","), values.split(",")))


class TestBoundCommand:
    """Test class for ``qrom bound``."""

    def test_owf(self, capsys):
        code = main(["bound", "--which", "owf", "--s", "4", "--t", "2", "--n", "1024", "--m", "1024"])
        row = _bound_row(capsys.readouterr().out)
        assert code == 0
        assert float(row["value"]) == pytest.approx(0.046875)
        assert row["trusted"] == "False"

    def test_salt_general(self, capsys):
        code = main(["bound", "--which", "salt-general", "--nu", "0.1", "--s", "8", "--t", "2",
                     "--t-samp", "1", "--t-verify", "1", "--k", "256"])
        assert code == 0
        assert float(_bound_row(capsys.readouterr().out)["value"]) == pytest.approx(0.525)

    def test_missing_parameter(self):
        assert main(["bound", "--which", "prg", "--s", "1"]) == 2

    def test_unknown_bound_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            main(["bound", "--which", "sha3"])


class TestRunCommand:
    """Test class for ``qrom list`` and ``qrom run``."""

    def test_list(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert "verify-lemmas" in out and "yz-counting" in out

    def test_run_config(self, tmp_path, capsys):
        config = tmp_path / "bound.json"
        config.write_text(json.dumps({
            "experiment": "bound-calculator",
            "params": {"which": "prg", "s": 4, "t": 2, "n": 1024},
        }))
        before = get_settings()
        code = main(["run", "--config", str(config), "--out", str(tmp_path / "out"),
                     "--seed", "3", "--threads", "2"])
        assert get_settings() == before

        assert code == 0
        paths = capsys.readouterr().out.split()
        assert any(p.endswith("bound-calculator.csv") for p in paths)
        sidecar = json.loads((tmp_path / "out" / "bound-calculator" / "bound-calculator.json").read_text())
        assert sidecar["config"]["seed"] == 3

    def test_threads_reach_the_run(self, tmp_path):
        config = tmp_path / "bound.json"
        config.write_text(json.dumps({"experiment": "bound-calculator", "params": {"which": "owf"}}))
        with patch("scripts.qrom_cli.run_experiment") as run:
            run.return_value.paths = []
            run.return_value.exit_code = 0
            assert main(["run", "--config", str(config), "--threads", "4"]) == 0
        settings = run.call_args.args[1]
        assert settings.threads == 4
        assert settings.max_dimension == get_settings().max_dimension

    def test_no_threads_flag_keeps_environment(self, tmp_path):
        config = tmp_path / "bound.json"
        config.write_text(json.dumps({"experiment": "bound-calculator", "params": {"which": "owf"}}))
        with patch("scripts.qrom_cli.run_experiment") as run:
            run.return_value.paths = []
            run.return_value.exit_code = 0
            main(["run", "--config", str(config)])
        assert run.call_args.args[1] is None

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2
