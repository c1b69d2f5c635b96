"""Tests for the command-line interface.

Runs every subcommand through click's CliRunner on small synthetic inputs,
checking output formats, artifact files, error reporting (exit codes,
stderr, line numbers), and that reruns with the same seed reproduce
artifacts byte for byte.
"""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest
from click.testing import CliRunner

from trendboot import __version__, simulate_ar1_trend
from trendboot.cli import main
from trendboot.config import CONFIG_KEYS

ARTIFACTS = (
    "cells.csv",
    "curves.csv",
    "results.geojson",
    "bic_table.csv",
    "assignments.csv",
    "manifest.txt",
)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def analyze_run(tmp_path_factory, grid_csv, smoke_config):
    """One shared `analyze` invocation on the 16-cell grid."""
    out_dir = tmp_path_factory.mktemp("analyze") / "run"
    result = CliRunner().invoke(
        main, ["--config", smoke_config, "analyze", grid_csv, "--out-dir", str(out_dir)]
    )
    return result, out_dir


class TestTopLevel:
    def test_help_lists_every_config_key(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for key in CONFIG_KEYS:
            assert key in result.output

    def test_version(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "trendboot" in result.output
        assert __version__ in result.output

    def test_bad_thread_count(self, runner, series_csv):
        result = runner.invoke(main, ["--threads", "0", "block-length", series_csv])
        assert result.exit_code != 0
        assert "--threads" in result.output + result.stderr

    def test_unknown_config_key_reports_line(self, runner, tmp_path, series_csv):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("replicates = 50\nturbo = on\n")
        result = runner.invoke(main, ["--config", str(cfg), "block-length", series_csv])
        assert result.exit_code != 0
        assert "line 2" in result.stderr
        assert "turbo" in result.stderr


class TestSimulateTable1:
    def test_smoke_table_and_csv(self, runner, tmp_path):
        out = tmp_path / "table1.csv"
        args = [
            "--seed", "3", "simulate-table1",
            "--n", "2000", "--r", "0.5", "--trend", "1e-4", "--noise-sd", "1.0",
            "--outer", "5", "--inner", "50", "--out", str(out),
        ]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        for row_name in ("ar1_process", "moving_block", "wild", "dep_wild_ar1"):
            assert row_name in result.output
        assert "seed=3" in result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "method,level,quantile_value"
        assert len(lines) == 1 + 4 * 7
        assert lines[1].startswith("ar1_process,0.025,")

    def test_rerun_identical(self, runner, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            result = runner.invoke(
                main,
                [
                    "--seed", "5", "simulate-table1",
                    "--n", "1200", "--outer", "3", "--inner", "40", "--out", str(out),
                ],
            )
            assert result.exit_code == 0, result.output
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSimulateTable2:
    def test_smoke_csv(self, runner, tmp_path):
        out = tmp_path / "table2.csv"
        args = [
            "--seed", "1", "simulate-table2",
            "--years", "5", "--years", "3", "--days-per-year", "100",
            "--outer", "3", "--inner", "60", "--out", str(out),
        ]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert "negative-replicate rates" in result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "years,fraction_negative"
        assert len(lines) == 3
        assert lines[1].startswith("3,") and lines[2].startswith("5,")
        for line in lines[1:]:
            assert 0.0 <= float(line.split(",")[1]) <= 1.0


class TestBootstrap:
    def test_default_method_reports_selection(self, runner, series_csv, tmp_path):
        quantiles = tmp_path / "q.csv"
        dump = tmp_path / "reps.csv"
        result = runner.invoke(
            main,
            [
                "--seed", "7", "bootstrap", series_csv,
                "--replicates", "150",
                "--out", str(quantiles), "--dump-replicates", str(dump),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "method=dep_wild_ar1 observations=4383 of 4383 days seed=7" in result.output
        assert "point_estimate=" in result.output
        assert "selected_r=" in result.output
        assert "95% interval [" in result.output
        assert "fraction of non-positive replicates:" in result.output
        q_lines = quantiles.read_text().splitlines()
        assert q_lines[0] == "method,level,quantile_value"
        assert len(q_lines) == 8
        d_lines = dump.read_text().splitlines()
        assert d_lines[0] == "replicate,slope"
        assert len(d_lines) == 151
        assert d_lines[1].startswith("0,")

    def test_moving_block_reports_length(self, runner, series_csv):
        result = runner.invoke(
            main,
            ["bootstrap", series_csv, "--method", "moving_block", "--replicates", "60"],
        )
        assert result.exit_code == 0, result.output
        length_lines = [l for l in result.output.splitlines() if l.startswith("block_length=")]
        assert len(length_lines) == 1
        assert int(length_lines[0].split("=")[1]) >= 1

    def test_wild_with_normal_weights(self, runner, series_csv):
        result = runner.invoke(
            main,
            ["bootstrap", series_csv, "--method", "wild", "--normal-weights", "--replicates", "60"],
        )
        assert result.exit_code == 0, result.output
        assert "method=wild" in result.output

    def test_kernel_bandwidth_flag(self, runner, series_csv):
        result = runner.invoke(
            main,
            [
                "bootstrap", series_csv,
                "--method", "dep_wild_kernel", "--bandwidth", "15", "--replicates", "30",
            ],
        )
        assert result.exit_code == 0, result.output
        assert "method=dep_wild_kernel" in result.output
        # n = 4383 stays under the factorization guard: no AR(1) substitution.
        assert "selected_r=" not in result.output

    def test_mismatched_options_fail_cleanly(self, runner, series_csv):
        result = runner.invoke(
            main, ["bootstrap", series_csv, "--method", "efron", "--weight-r", "0.5"]
        )
        assert result.exit_code != 0
        assert "does not take a weight process" in result.stderr

    def test_bad_block_length(self, runner, series_csv):
        result = runner.invoke(
            main,
            ["bootstrap", series_csv, "--method", "moving_block", "--block-length", "soon"],
        )
        assert result.exit_code != 0
        assert "--block-length" in result.output + result.stderr

    def test_determinism(self, runner, series_csv, tmp_path):
        dumps = []
        for name in ("a.csv", "b.csv"):
            dump = tmp_path / name
            result = runner.invoke(
                main,
                [
                    "--seed", "13", "bootstrap", series_csv,
                    "--replicates", "80", "--dump-replicates", str(dump),
                ],
            )
            assert result.exit_code == 0, result.output
            dumps.append(dump.read_bytes())
        assert dumps[0] == dumps[1]


class TestBlockLength:
    def test_prints_integer(self, runner, series_csv):
        result = runner.invoke(main, ["block-length", series_csv])
        assert result.exit_code == 0, result.output
        assert int(result.output.strip()) >= 1

    def test_no_detrend_variant(self, runner, series_csv):
        result = runner.invoke(main, ["block-length", series_csv, "--no-detrend"])
        assert result.exit_code == 0, result.output
        assert int(result.output.strip()) >= 1

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(main, ["block-length", str(tmp_path / "nope.csv")])
        assert result.exit_code != 0


class TestAnalyze:
    def test_artifacts_written(self, analyze_run):
        result, out_dir = analyze_run
        assert result.exit_code == 0, result.output
        for name in ARTIFACTS:
            assert (out_dir / name).is_file(), name
        assert "analyzed 16 cells (1 excluded, 0 failed)" in result.output
        assert "clustering: scanned" in result.output

    def test_cells_csv_contents(self, analyze_run):
        _, out_dir = analyze_run
        lines = (out_dir / "cells.csv").read_text().splitlines()
        assert lines[0] == "cell_id,lat,lon,max_coeff,r2_max,sig_fraction,p_nonpositive,cluster"
        assert len(lines) == 17
        excluded = [l for l in lines if l.startswith("c05,")]
        assert len(excluded) == 1
        assert excluded[0].endswith(",,,,,")  # all statistics empty

    def test_curves_csv_contents(self, analyze_run):
        _, out_dir = analyze_run
        lines = (out_dir / "curves.csv").read_text().splitlines()
        assert lines[0] == "cell_id,k,slope,r_squared"
        # 15 complete cells x k_max = 6 offsets
        assert len(lines) == 1 + 15 * 6
        assert not any(l.startswith("c05,") for l in lines)

    def test_manifest_contents(self, analyze_run):
        _, out_dir = analyze_run
        text = (out_dir / "manifest.txt").read_text()
        lines = text.splitlines()
        assert lines == sorted(lines)
        entries = dict(line.split("=", 1) for line in lines)
        assert entries["command"] == "analyze"
        assert entries["config.k_max"] == "6"
        assert entries["config.k_compare"] == "2,4"
        assert entries["config.seed"] == "11"
        assert entries["cells.total"] == "16"
        assert entries["cells.excluded"] == "1"
        assert entries["cells.failed"] == "0"
        assert entries["versions.trendboot"] == __version__
        assert entries["versions.numpy"] == np.__version__
        assert "notes" in entries

    def test_rerun_is_byte_identical(self, analyze_run, runner, grid_csv, smoke_config, tmp_path):
        _, first_dir = analyze_run
        second_dir = tmp_path / "again"
        result = runner.invoke(
            main,
            ["--config", smoke_config, "analyze", grid_csv, "--out-dir", str(second_dir)],
        )
        assert result.exit_code == 0, result.output
        for name in ARTIFACTS:
            assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes(), name

    def test_failing_cell_exits_nonzero(self, runner, tmp_path):
        grid = tmp_path / "grid.csv"
        rows = ["cell_id,lat,lon,date,value"]
        start = dt.date(2000, 1, 1)
        good = simulate_ar1_trend(1200, 1e-4, 0.4, 1.0, seed=0)
        for i, v in enumerate(good):
            rows.append(f"good,0,0,{start + dt.timedelta(days=i)},{float(v)!r}")
        for i in range(400):
            rows.append(f"short,1,1,{start + dt.timedelta(days=i)},1.5")
        grid.write_text("\n".join(rows) + "\n")
        cfg = tmp_path / "c.cfg"
        cfg.write_text("k_max = 2\nk_compare = 0,1\nreplicates = 50\n")
        result = runner.invoke(
            main,
            ["--config", str(cfg), "analyze", str(grid), "--out-dir", str(tmp_path / "out")],
        )
        assert result.exit_code == 1
        assert "failed cells:" in result.stderr
        assert "short" in result.stderr
        for name in ARTIFACTS:  # artifacts still written for the good cell
            assert (tmp_path / "out" / name).is_file(), name

    def test_bad_grid_reports_line(self, runner, tmp_path):
        grid = tmp_path / "grid.csv"
        grid.write_text("cell_id,lat,lon,date,value\na,0,0,2000-01-01\n")
        result = runner.invoke(
            main, ["analyze", str(grid), "--out-dir", str(tmp_path / "out")]
        )
        assert result.exit_code != 0
        assert "line 2" in result.stderr


class TestCluster:
    def test_matches_analyze_assignments(self, analyze_run, runner, smoke_config, tmp_path):
        _, analyze_dir = analyze_run
        out_dir = tmp_path / "cluster"
        result = runner.invoke(
            main,
            [
                "--config", smoke_config, "cluster",
                str(analyze_dir / "curves.csv"), "--out-dir", str(out_dir),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "selected K=" in result.output
        for name in ("bic_table.csv", "assignments.csv"):
            assert (analyze_dir / name).read_bytes() == (out_dir / name).read_bytes(), name

    def test_incomplete_curves_skipped(self, runner, tmp_path):
        curves = tmp_path / "curves.csv"
        rows = ["cell_id,k,slope,r_squared"]
        rng = np.random.default_rng(0)
        for i in range(8):
            base = 1.0 if i < 4 else 5.0
            for k in range(2):
                rows.append(f"p{i},{k},{base + rng.normal(0, 0.1)!r},0.5")
        rows.append("broken,0,1.0,0.5")  # only one of two offsets
        curves.write_text("\n".join(rows) + "\n")
        out_dir = tmp_path / "out"
        result = runner.invoke(main, ["cluster", str(curves), "--out-dir", str(out_dir)])
        assert result.exit_code == 0, result.output
        assert "skipping 'broken'" in result.stderr
        assignments = (out_dir / "assignments.csv").read_text().splitlines()
        assert len(assignments) == 9  # header + 8 complete curves
        assert not any(line.startswith("broken,") for line in assignments)

    def test_unknown_family_rejected(self, runner, analyze_run, tmp_path):
        _, analyze_dir = analyze_run
        result = runner.invoke(
            main,
            [
                "cluster", str(analyze_dir / "curves.csv"),
                "--families", "EII,ZZZ", "--out-dir", str(tmp_path / "out"),
            ],
        )
        assert result.exit_code != 0
        assert "ZZZ" in result.output + result.stderr

    def test_k_min_validated(self, runner, analyze_run, tmp_path):
        _, analyze_dir = analyze_run
        result = runner.invoke(
            main,
            [
                "cluster", str(analyze_dir / "curves.csv"),
                "--k-min", "7", "--out-dir", str(tmp_path / "out"),
            ],
        )
        assert result.exit_code != 0
        assert "--k-min" in result.output + result.stderr

    def test_too_few_curves(self, runner, tmp_path):
        curves = tmp_path / "curves.csv"
        rows = ["cell_id,k,slope,r_squared"]
        for i in range(2):
            for k in range(6):
                rows.append(f"p{i},{k},{0.1 * k},0.5")
        curves.write_text("\n".join(rows) + "\n")
        result = runner.invoke(main, ["cluster", str(curves), "--out-dir", str(tmp_path / "o")])
        assert result.exit_code != 0
        assert "cannot support" in result.stderr
