import json
import os

import numpy as np
import pytest

from hypershell import cli, runio
from hypershell.runio import UsageError

from conftest import make_config


def run_cli(*args):
    return cli.main([str(a) for a in args])


@pytest.fixture()
def run_dir(tmp_path):
    cfg = make_config(tmp_path / "run.cfg")
    out = tmp_path / "out"
    assert run_cli("simulate", "--config", cfg, "--out", out, "--quiet") == 0
    return out


class TestSimulate:
    def test_outputs_and_manifest(self, run_dir):
        manifest = runio.read_manifest(str(run_dir))
        assert manifest["status"] == "ok"
        listed = set(manifest["outputs"])
        states = sorted(os.listdir(run_dir / "states"))
        assert len(states) >= 1
        for name in states:
            assert f"states/{name}" in listed
        assert "timeseries.csv" in listed
        # no orphans: everything listed exists on disk
        for name in listed:
            assert (run_dir / name).exists()
        header, data = runio.read_csv(str(run_dir / "timeseries.csv"))
        assert tuple(header) == runio.TIMESERIES_COLUMNS
        assert data.shape[0] >= 2

    def test_missing_key_names_it(self, tmp_path, capsys):
        cfg = make_config(tmp_path / "broken.cfg", **{"law.alpha": None})
        code = run_cli("simulate", "--config", cfg, "--out", tmp_path / "o")
        assert code == 2
        assert "law.alpha" in capsys.readouterr().err

    def test_deterministic_reruns(self, tmp_path):
        cfg = make_config(tmp_path / "run.cfg")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli("simulate", "--config", cfg, "--out", out1, "--quiet") == 0
        assert run_cli("simulate", "--config", cfg, "--out", out2, "--quiet") == 0
        assert (out1 / "timeseries.csv").read_bytes() == (out2 / "timeseries.csv").read_bytes()
        for name in os.listdir(out1 / "states"):
            assert (out1 / "states" / name).read_bytes() == (out2 / "states" / name).read_bytes()

    def test_checkpoint_roundtrip(self, run_dir):
        paths = runio.list_checkpoints(str(run_dir))
        state, law = runio.read_checkpoint(paths[-1])
        assert state.dim == 2 and state.cutoff == 8
        assert law.g.family == "log_power"
        # write back and compare bytes
        copy = str(run_dir / "roundtrip.txt")
        runio.write_checkpoint(copy, state, law)
        assert open(copy, "rb").read() == open(paths[-1], "rb").read()


class TestAnalyzeVerify:
    def test_analyze_outputs(self, run_dir):
        assert run_cli("analyze", run_dir, "--quiet") == 0
        for name in ("shells.csv", "interactions.csv", "diagnostics.csv", "summary.json"):
            assert (run_dir / name).exists()
        header, _ = runio.read_csv(str(run_dir / "shells.csv"))
        assert tuple(header) == runio.SHELL_COLUMNS
        summary = json.loads((run_dir / "summary.json").read_text())
        assert summary["d_recursion"]["max_violation"] <= 1e-8
        assert summary["energy_inequality"]["worst_relative_violation"] < 1e-6

    def test_verify_healthy_run(self, run_dir):
        assert run_cli("analyze", run_dir, "--quiet") == 0
        assert run_cli("verify", run_dir, "--quiet") == 0

    def test_manifest_tracks_analysis_and_verification(self, run_dir):
        assert run_cli("analyze", run_dir, "--quiet") == 0
        manifest = runio.read_manifest(str(run_dir))
        for name in ("shells.csv", "interactions.csv", "diagnostics.csv", "summary.json"):
            assert name in manifest["outputs"]
        for name in manifest["outputs"]:
            assert (run_dir / name).exists()
        assert run_cli("verify", run_dir, "--quiet") == 0
        manifest = runio.read_manifest(str(run_dir))
        assert manifest["verification"]["passed"] is True
        assert manifest["verification"]["checks"]["energy_inequality"]["passed"]

    def test_single_mode_interactions_all_zero(self, tmp_path):
        cfg = make_config(
            tmp_path / "run.cfg",
            **{"init.kind": "single_mode", "init.k0": "1,0", "run.cutoff": "8"},
        )
        out = tmp_path / "sm"
        assert run_cli("simulate", "--config", cfg, "--out", out, "--quiet") == 0
        assert run_cli("analyze", out, "--quiet") == 0
        _, data = runio.read_csv(str(out / "interactions.csv"))
        assert np.all(data[:, 4] == 0.0)

    def test_zero_state_diagnostics_all_zero(self, tmp_path):
        cfg = make_config(
            tmp_path / "run.cfg",
            **{"init.kind": "single_mode", "init.k0": "1,0", "init.amplitude": "0.0"},
        )
        out = tmp_path / "zero"
        assert run_cli("simulate", "--config", cfg, "--out", out, "--quiet") == 0
        assert run_cli("analyze", out, "--quiet") == 0
        _, shell_data = runio.read_csv(str(out / "shells.csv"))
        assert np.all(shell_data[:, 2] == 0.0)  # energies
        _, diag_data = runio.read_csv(str(out / "diagnostics.csv"))
        assert np.all(diag_data[:, 2:] == 0.0)
        assert run_cli("verify", out, "--quiet") == 0

    def test_coarse_dt_fails_ode_residual(self, tmp_path, capsys):
        cfg = make_config(
            tmp_path / "run.cfg",
            **{
                "run.dt": "0.02",
                "run.t_end": "0.2",
                "run.sample_every": "1",
                "run.cutoff": "16",
                "init.decay": "3.0",
                "init.amplitude": "1.5",
            },
        )
        out = tmp_path / "coarse"
        assert run_cli("simulate", "--config", cfg, "--out", out, "--quiet") == 0
        assert run_cli("analyze", out, "--quiet") == 0
        code = run_cli("verify", out)
        printed = capsys.readouterr().out
        assert code == 1
        assert "shell_ode_residual" in printed and "FAIL" in printed

    def test_cutoff_key_alias(self, tmp_path):
        cfg = make_config(tmp_path / "run.cfg", **{"run.cutoff": None, "run.K": "8"})
        out = tmp_path / "alias"
        assert run_cli("simulate", "--config", cfg, "--out", out, "--quiet") == 0
        assert runio.read_manifest(str(out))["run"]["cutoff"] == 8

    def test_fault_injection_breaks_antisymmetry(self, run_dir, capsys):
        assert run_cli("analyze", run_dir, "--quiet") == 0
        path = run_dir / "interactions.csv"
        lines = path.read_text().splitlines()
        # find a row with a nonzero value and corrupt it
        for i, line in enumerate(lines[1:], start=1):
            parts = line.split(",")
            if abs(float(parts[4])) > 1e-12:
                parts[4] = repr(float(parts[4]) * 1.5)
                lines[i] = ",".join(parts)
                break
        path.write_text("\n".join(lines) + "\n")
        code = run_cli("verify", run_dir)
        out = capsys.readouterr().out
        assert code == 1
        assert "interaction_antisymmetry" in out and "FAIL" in out

    def test_tolerance_scale_loosens(self, run_dir):
        assert run_cli("analyze", run_dir, "--quiet") == 0
        path = run_dir / "interactions.csv"
        lines = path.read_text().splitlines()
        for i, line in enumerate(lines[1:], start=1):
            parts = line.split(",")
            value = float(parts[4])
            if abs(value) > 1e-12:
                parts[4] = repr(value * (1.0 + 1e-7))
                lines[i] = ",".join(parts)
                break
        path.write_text("\n".join(lines) + "\n")
        assert run_cli("verify", run_dir, "--quiet") == 1
        assert run_cli("verify", run_dir, "--tolerance-scale", "1e6", "--quiet") == 0

    def test_missing_checkpoint_reports_gap(self, run_dir):
        os.remove(sorted((run_dir / "states").iterdir())[1])
        with pytest.raises(UsageError, match="missing checkpoints"):
            runio.list_checkpoints(str(run_dir))


class TestCatalog:
    def test_rows_printed(self, capsys):
        assert run_cli("catalog") == 0
        out = capsys.readouterr().out
        assert "log_power(1)" in out and "divergent" in out
        assert "power(0.5)" in out and "convergent" in out


class TestOracleCommand:
    def test_cross_check_runs(self, capsys):
        assert run_cli("oracle", "--seed", "2") == 0
        out = capsys.readouterr().out
        assert "relative error" in out


class TestConfigParsing:
    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("law.alpha 2.0\n")
        with pytest.raises(UsageError, match="bad.cfg:1"):
            runio.parse_config(str(path))

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "ok.cfg"
        path.write_text("# comment\n\nlaw.alpha = 2.0  # trailing\n")
        assert runio.parse_config(str(path)) == {"law.alpha": "2.0"}

    def test_bad_values_named(self, tmp_path):
        cfg = make_config(tmp_path / "run.cfg", **{"run.dt": "fast"})
        values = runio.parse_config(str(cfg))
        with pytest.raises(UsageError, match="run.dt"):
            runio.config_run(values)
