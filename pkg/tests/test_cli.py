import dataclasses

import pytest

from biofilm1d import configio
from biofilm1d.cli import (EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION,
                           cli)
from biofilm1d.output import BOUNDARY_NAME, MANIFEST_NAME
from biofilm1d.presets import build_preset


@pytest.fixture()
def tiny_config(tmp_path):
    cfg = build_preset("case1").cfg
    nm = dataclasses.replace(cfg.numerics, N=24, dt_max=5e-4)
    cfg = dataclasses.replace(cfg, numerics=nm, horizon=0.02,
                              snapshot_times=(0.02,))
    path = tmp_path / "tiny.cfg"
    configio.save(cfg, path)
    return path


class TestRunCommand:
    def test_run_with_config_file(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "results"
        assert cli(["run", "--config", str(tiny_config), "--out", str(out)]) == EXIT_OK
        assert (out / BOUNDARY_NAME).exists()
        assert (out / MANIFEST_NAME).exists()
        assert "content sha256" in capsys.readouterr().out

    def test_run_requires_scenario(self, tmp_path):
        assert cli(["run", "--out", str(tmp_path / "o")]) == EXIT_VALIDATION

    def test_run_rejects_invalid_config(self, tiny_config, tmp_path):
        bad = tiny_config.read_text().replace("scenario.delta = 2000.0",
                                              "scenario.delta = -1.0")
        bad_path = tiny_config.parent / "bad.cfg"
        bad_path.write_text(bad)
        code = cli(["run", "--config", str(bad_path), "--out", str(tmp_path / "o")])
        assert code == EXIT_VALIDATION


class TestValidateCommand:
    def test_ok_config(self, tiny_config, capsys):
        assert cli(["validate", "--config", str(tiny_config)]) == EXIT_OK
        assert "ok" in capsys.readouterr().out

    def test_negative_delta_rejected(self, tiny_config, capsys):
        bad = tiny_config.read_text().replace("scenario.delta = 2000.0",
                                              "scenario.delta = -5.0")
        path = tiny_config.parent / "neg.cfg"
        path.write_text(bad)
        assert cli(["validate", "--config", str(path)]) == EXIT_VALIDATION
        assert "delta" in capsys.readouterr().out

    def test_unparseable_config(self, tmp_path):
        path = tmp_path / "broken.cfg"
        path.write_text("scenario.delta == oops\n")
        assert cli(["validate", "--config", str(path)]) == EXIT_VALIDATION


class TestUsageErrors:
    def test_unknown_flag(self):
        assert cli(["run", "--nope", "x"]) == EXIT_USAGE

    def test_unknown_preset(self, tmp_path):
        assert cli(["run", "--preset", "case9", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_missing_subcommand(self):
        assert cli([]) == EXIT_USAGE


class TestAnalysisCommands:
    def test_window_reports_contractive_horizon(self, capsys):
        assert cli(["window", "--preset", "case1", "--span", "0.01"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "T_star" in out and "a = " in out
        # the reported window satisfies its own contraction condition
        factor = float(out.split("contraction factor there: ")[1].split(")")[0])
        assert 0.0 <= factor < 1.0

    def test_numerical_failure_exit_code(self, capsys):
        # a multi-day oracle horizon sits far outside the contraction window
        import numpy as np
        with np.errstate(all="ignore"):
            code = cli(["oracle", "--preset", "case1", "--horizon", "5.0",
                        "--grid", "20"])
        assert code == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    def test_oracle_cross_validation(self, capsys):
        code = cli(["oracle", "--preset", "case1", "--horizon", "0.004",
                    "--grid", "16"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "fixed point reached" in out
        assert "cross-validation" in out
