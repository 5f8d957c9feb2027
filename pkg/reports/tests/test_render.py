import importlib.util
import json
import os
import subprocess
import sys

import pytest

from hypershell_reports import FIGURES, ReportSpec, SchemaError, render
from hypershell_reports.cli import main as report_main


def read_all(directory):
    return {name: (directory / name).read_bytes() for name in os.listdir(directory)}


class TestRender:
    def test_all_selected_figures(self, reference_run, tmp_path):
        out = tmp_path / "figures"
        written = render(ReportSpec(str(reference_run), str(out)))
        assert sorted(written) == sorted([f"{name}.png" for name in FIGURES] + ["index.md"])
        for name in written:
            assert (out / name).stat().st_size > 0
        index = (out / "index.md").read_text()
        for name in FIGURES:
            assert f"{name}.png" in index

    def test_rerun_is_idempotent(self, reference_run, tmp_path):
        out = tmp_path / "figures"
        render(ReportSpec(str(reference_run), str(out)))
        first = read_all(out)
        render(ReportSpec(str(reference_run), str(out)))
        assert read_all(out) == first

    def test_empty_selection_gives_index_only(self, reference_run, tmp_path):
        out = tmp_path / "only_index"
        written = render(ReportSpec(str(reference_run), str(out), figures=()))
        assert written == ["index.md"]
        assert os.listdir(out) == ["index.md"]

    def test_inputs_untouched(self, reference_run, tmp_path):
        before = read_all(reference_run)
        render(ReportSpec(str(reference_run), str(tmp_path / "f")))
        assert read_all(reference_run) == before

    def test_unknown_figure_rejected(self, reference_run, tmp_path):
        with pytest.raises(SchemaError, match="waterfall"):
            ReportSpec(str(reference_run), str(tmp_path), figures=("waterfall",))


class TestSchemaDrift:
    def test_renamed_column_is_named(self, reference_run, tmp_path):
        path = reference_run / "shells.csv"
        lines = path.read_text().splitlines()
        lines[0] = lines[0].replace("energy", "amplitude")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError, match="energy"):
            render(ReportSpec(str(reference_run), str(tmp_path / "f")))

    def test_missing_file_is_named(self, reference_run, tmp_path):
        os.remove(reference_run / "diagnostics.csv")
        with pytest.raises(SchemaError, match="diagnostics.csv"):
            render(ReportSpec(str(reference_run), str(tmp_path / "f")))

    def test_missing_summary_key_is_named(self, reference_run, tmp_path):
        path = reference_run / "summary.json"
        summary = json.loads(path.read_text())
        del summary["Q"]
        path.write_text(json.dumps(summary))
        with pytest.raises(SchemaError, match="'Q'"):
            render(ReportSpec(str(reference_run), str(tmp_path / "f")))


class TestCli:
    def test_renders_selection(self, reference_run, tmp_path, capsys):
        out = tmp_path / "cli_out"
        code = report_main(
            ["--in", str(reference_run), "--out", str(out), "--figures", "spectra,cascade"]
        )
        assert code == 0
        assert sorted(os.listdir(out)) == ["cascade.png", "index.md", "spectra.png"]

    def test_schema_error_exit_code(self, reference_run, tmp_path, capsys):
        os.remove(reference_run / "summary.json")
        code = report_main(["--in", str(reference_run), "--out", str(tmp_path / "x")])
        assert code == 2
        assert "summary.json" in capsys.readouterr().err


@pytest.mark.skipif(
    importlib.util.find_spec("hypershell") is None,
    reason="primary package not installed",
)
class TestAgainstRealRun:
    def test_full_pipeline(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            "\n".join(
                [
                    "law.alpha = 2.0",
                    "law.beta = 0.0",
                    "law.dim = 2",
                    "law.g.family = log_power",
                    "law.g.param = 1.0",
                    "run.cutoff = 8",
                    "run.dt = 0.001",
                    "run.t_end = 0.02",
                    "run.sample_every = 2",
                    "run.seed = 5",
                    "init.kind = random_smooth",
                    "init.decay = 4.0",
                    "init.amplitude = 0.5",
                ]
            )
            + "\n"
        )
        run_dir = tmp_path / "run"
        for args in (
            ["simulate", "--config", str(config), "--out", str(run_dir), "--quiet"],
            ["analyze", str(run_dir), "--quiet"],
        ):
            result = subprocess.run(
                [sys.executable, "-m", "hypershell.cli", *args], capture_output=True
            )
            assert result.returncode == 0, result.stderr.decode()
        out = tmp_path / "report"
        written = render(ReportSpec(str(run_dir), str(out)))
        assert sorted(written) == sorted([f"{n}.png" for n in FIGURES] + ["index.md"])
        first = read_all(out)
        render(ReportSpec(str(run_dir), str(out)))
        assert read_all(out) == first
