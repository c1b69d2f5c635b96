"""Command-line interface.

Subcommands cover the two seeded simulation experiments (``simulate-table1``,
``simulate-table2``), the end-to-end grid analysis (``analyze``), standalone
curve clustering (``cluster``), and single-series utilities (``bootstrap``,
``block-length``).  Every command is bit-reproducible given ``--seed``; all
tabular outputs are CSV with fixed headers, and ``analyze`` writes a
key=value manifest with no timestamps so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import importlib.metadata
import math
import os
import sys

import click
import numpy as np
import scipy
import sklearn

from . import __version__
from .blocklength import politis_white_block_length
from .bootstrap import (
    QUANTILE_LEVELS,
    BootstrapConfig,
    bootstrap_trend,
)
from .config import CONFIG_KEYS, AnalysisConfig, parse_config_file
from .exceptions import TrendbootError
from .grid import (
    ingest_grid_csv,
    run_grid_analysis,
    write_curves_csv,
    write_results_csv,
    write_results_geojson,
)
from .kmeans import ClusterAssignment
from .mixture import FAMILIES, select_model, write_assignments, write_bic_table
from .series import DailySeries
from .simulate import TABLE1_ROW_ORDER, simulate_table1, simulate_table2
from .trend import fit_ols_trend
from .weights import WeightProcess

_METHOD_CHOICES = ("efron", "wild", "dep_wild_ar1", "dep_wild_kernel", "moving_block")


def _config_epilog() -> str:
    width = max(len(key) for key in CONFIG_KEYS)
    lines = ["Configuration file keys (one 'key = value' per line, '#' comments):", "", "\b"]
    for key, text in CONFIG_KEYS.items():
        lines.append(f"  {key.ljust(width)}  {text}")
    return "\n".join(lines)


@click.group(epilog=_config_epilog())
@click.version_option(__version__, prog_name="trendboot")
@click.option("--seed", type=int, default=None, help="Master seed; overrides the config file value (default 0).")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker processes for outer simulations and grid cells.")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Configuration file; accepted keys are listed at the bottom of this help text.",
)
@click.pass_context
def main(ctx, seed, threads, config_path):
    """Trend estimation for daily series with dependence-aware bootstraps."""
    if threads < 1:
        raise click.BadParameter("--threads must be a positive integer")
    try:
        config = parse_config_file(config_path) if config_path else AnalysisConfig()
        if seed is not None:
            config = config.replace(seed=seed)
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    ctx.obj = {"config": config, "threads": threads}


def _settings(ctx) -> tuple[AnalysisConfig, int]:
    """Effective config and thread count resolved by the group callback."""
    obj = ctx.obj or {}
    return obj.get("config") or AnalysisConfig(), obj.get("threads") or 1


def _write_quantile_csv(path, rows: dict, levels) -> None:
    """Write ``method,level,quantile_value`` rows in a fixed method order."""
    order = [name for name in TABLE1_ROW_ORDER if name in rows]
    order += [name for name in sorted(rows) if name not in order]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "level", "quantile_value"])
        for name in order:
            for level, value in zip(levels, rows[name]):
                writer.writerow([name, repr(float(level)), repr(float(value))])


@main.command("simulate-table1")
@click.option("--n", type=int, default=23360, show_default=True, help="Series length in days.")
@click.option("--r", type=float, default=0.812, show_default=True, help="AR(1) coefficient of the noise.")
@click.option("--trend", type=float, default=8.6e-5, show_default=True, help="True slope per day.")
@click.option("--noise-sd", type=float, default=3.25, show_default=True, help="Marginal noise standard deviation.")
@click.option("--outer", type=int, default=500, show_default=True, help="Simulated series.")
@click.option("--inner", type=int, default=500, show_default=True, help="Bootstrap replicates per series.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the table as method,level,quantile_value CSV.")
@click.pass_context
def cmd_simulate_table1(ctx, n, r, trend, noise_sd, outer, inner, out):
    """Slope-quantile table: three bootstraps against the simulated truth.

    Rows, in order: the quantiles of the estimator over the simulated AR(1)
    series (ar1_process), then the averaged bootstrap quantiles for the
    moving-block, independent-weight, and AR(1)-weight methods.
    """
    config, threads = _settings(ctx)
    try:
        result = simulate_table1(
            n=n, r=r, trend=trend, noise_sd=noise_sd,
            outer=outer, inner=inner, seed=config.seed, threads=threads,
        )
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"slope quantiles x 1e5 ({outer} series of n={n}, {inner} replicates, seed={config.seed})")
    click.echo(result.format_table())
    if out:
        _write_quantile_csv(out, result.rows, result.levels)
        click.echo(f"wrote {out}")


@main.command("simulate-table2")
@click.option("--years", "year_counts", type=int, multiple=True, default=(10, 30, 60), show_default=True, help="Series lengths in years (repeatable).")
@click.option("--trend", type=float, default=1e-4, show_default=True, help="True slope per day.")
@click.option("--r", type=float, default=0.9, show_default=True, help="AR(1) coefficient of the noise.")
@click.option("--innovation-sd", type=float, default=math.sqrt(0.19), show_default=True, help="Standard deviation of the AR(1) innovations.")
@click.option("--days-per-year", type=int, default=260, show_default=True, help="Observations per simulated year.")
@click.option("--outer", type=int, default=100, show_default=True, help="Simulated series per year count.")
@click.option("--inner", type=int, default=500, show_default=True, help="Bootstrap replicates per series.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write years,fraction_negative CSV.")
@click.pass_context
def cmd_simulate_table2(ctx, year_counts, trend, r, innovation_sd, days_per_year, outer, inner, out):
    """Fraction of non-positive bootstrap slopes by series length.

    For each year count, simulates trending AR(1) series, runs the
    AR(1)-weight bootstrap on each, and averages the fraction of replicate
    slopes that are non-positive — the evidence against a positive trend.
    """
    config, threads = _settings(ctx)
    try:
        result = simulate_table2(
            year_counts=year_counts, trend=trend, r=r, innovation_sd=innovation_sd,
            days_per_year=days_per_year, outer=outer, inner=inner,
            seed=config.seed, threads=threads,
        )
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"negative-replicate rates ({outer} series per row, {inner} replicates, seed={config.seed})")
    click.echo(result.format_table())
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["years", "fraction_negative"])
            for years in sorted(result.fractions):
                writer.writerow([years, repr(float(result.fractions[years]))])
        click.echo(f"wrote {out}")


@main.command("bootstrap")
@click.argument("series_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(_METHOD_CHOICES), default="dep_wild_ar1", show_default=True, help="Resampling scheme.")
@click.option("--replicates", type=int, default=500, show_default=True, help="Bootstrap replicates.")
@click.option("--block-length", default="auto", show_default=True, help="moving_block only: block length, or 'auto' for the data-driven rule.")
@click.option("--weight-r", type=float, default=None, help="dep_wild_ar1 only: fix the weight AR(1) coefficient instead of selecting it.")
@click.option("--bandwidth", type=int, default=None, help="dep_wild_kernel only: kernel bandwidth in days.")
@click.option("--normal-weights", is_flag=True, help="wild only: Gaussian weights instead of Rademacher.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write method,level,quantile_value CSV.")
@click.option("--dump-replicates", type=click.Path(dir_okay=False), default=None, help="Write every slope replicate as replicate,slope CSV.")
@click.pass_context
def cmd_bootstrap(ctx, series_csv, method, replicates, block_length, weight_r, bandwidth, normal_weights, out, dump_replicates):
    """Bootstrap the linear trend of one date,value series.

    Fits an ordinary-least-squares line to the observed days, resamples the
    residuals with the chosen scheme, and prints the slope quantiles.
    """
    config, _ = _settings(ctx)
    weight_process = None
    if weight_r is not None:
        weight_process = WeightProcess.ar1(weight_r)
    elif bandwidth is not None:
        weight_process = WeightProcess.kernel_mvn(bandwidth)
    elif normal_weights:
        weight_process = WeightProcess.iid_normal()
    if block_length != "auto":
        try:
            block_length = int(block_length)
        except ValueError:
            raise click.BadParameter("--block-length must be an integer or 'auto'")
    try:
        series = DailySeries.from_csv(series_csv)
        boot_config = BootstrapConfig(
            method=method,
            replicates=replicates,
            weight_process=weight_process,
            block_length=block_length if method == "moving_block" else None,
            seed=config.seed,
        )
        result = bootstrap_trend(series.values, boot_config, missing_mask=series.missing_mask)
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(
        f"method={result.method} observations={series.n_observed} of "
        f"{len(series)} days seed={config.seed}"
    )
    click.echo(f"point_estimate={result.point_estimate!r}")
    if result.selected_r is not None:
        click.echo(f"selected_r={result.selected_r!r}")
    if result.block_length is not None:
        click.echo(f"block_length={result.block_length}")
    low, high = result.interval(0.95)
    click.echo(f"95% interval [{low!r}, {high!r}]")
    click.echo(f"fraction of non-positive replicates: {float(np.mean(result.slope_replicates <= 0.0))!r}")
    if out:
        _write_quantile_csv(
            out,
            {result.method: [result.quantiles[lv] for lv in QUANTILE_LEVELS]},
            QUANTILE_LEVELS,
        )
        click.echo(f"wrote {out}")
    if dump_replicates:
        with open(dump_replicates, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "slope"])
            for i, slope in enumerate(result.slope_replicates):
                writer.writerow([i, repr(float(slope))])
        click.echo(f"wrote {dump_replicates}")


@main.command("block-length")
@click.argument("series_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--detrend/--no-detrend", default=True, show_default=True, help="Estimate on OLS trend residuals rather than raw values.")
def cmd_block_length(series_csv, detrend):
    """Data-driven moving-block length for one date,value series."""
    try:
        series = DailySeries.from_csv(series_csv)
        if detrend:
            x = fit_ols_trend(series.values, missing_mask=series.missing_mask).residuals
        else:
            x = np.where(series.missing_mask, np.nan, series.values)
        b = politis_white_block_length(x)
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(str(b))


def _read_curves_csv(path):
    """Read cell_id,k,slope,r_squared rows into per-id slope vectors.

    Returns ``(ids, matrix, skipped)`` where ``matrix`` stacks the complete
    curves in first-appearance id order and ``skipped`` lists ids dropped
    for missing slope values or a curve length different from the majority.
    """
    by_id: dict[str, dict[int, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["cell_id", "k"]:
            raise click.ClickException(f"{path}: expected header cell_id,k,slope,r_squared")
        for row in reader:
            if not row or not "".join(row).strip():
                continue
            cell_id, k, slope = row[0], int(row[1]), row[2].strip()
            by_id.setdefault(cell_id, {})[k] = float(slope) if slope else math.nan
    if not by_id:
        raise click.ClickException(f"{path}: no curve rows found")
    lengths = [len(ks) for ks in by_id.values()]
    d = max(set(lengths), key=lengths.count)
    ids, curves, skipped = [], [], []
    for cell_id, ks in by_id.items():
        vec = np.array([ks[k] for k in sorted(ks)], dtype=float)
        if len(vec) != d or np.isnan(vec).any():
            skipped.append(cell_id)
            continue
        ids.append(cell_id)
        curves.append(vec)
    if not ids:
        raise click.ClickException(f"{path}: no complete curves of length {d}")
    return ids, np.vstack(curves), skipped


@main.command("cluster")
@click.argument("curves_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--k-min", type=int, default=1, show_default=True, help="Smallest component count scanned.")
@click.option("--k-max", type=int, default=None, help="Largest component count scanned [default: cluster_k_max from the config, capped by feasibility].")
@click.option("--families", default=",".join(FAMILIES), show_default=True, help="Comma-separated covariance families to scan.")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True, help="Directory for bic_table.csv and assignments.csv.")
@click.pass_context
def cmd_cluster(ctx, curves_csv, k_min, k_max, families, out_dir):
    """Cluster coefficient curves (cell_id,k,slope,r_squared CSV) by BIC.

    Scans component counts and covariance families with seeded restarts,
    prints the winning model, and writes the score table and hard
    assignments under --out-dir.
    """
    config, _ = _settings(ctx)
    family_list = tuple(f.strip() for f in families.split(",") if f.strip())
    unknown = [f for f in family_list if f not in FAMILIES]
    if unknown:
        raise click.BadParameter(f"unknown families {unknown}; choose from {', '.join(FAMILIES)}")
    ids, curves, skipped = _read_curves_csv(curves_csv)
    for cell_id in skipped:
        click.echo(f"skipping {cell_id!r}: incomplete curve", err=True)
    n, d = curves.shape
    k_feasible = n // (d + 1)
    if k_feasible < 1:
        raise click.ClickException(
            f"{n} curves of length {d} cannot support even one component (need {d + 1})"
        )
    k_top = min(k_max if k_max is not None else config.cluster_k_max, k_feasible)
    if k_min < 1 or k_min > k_top:
        raise click.BadParameter(f"--k-min must lie in [1, {k_top}]")
    try:
        selection = select_model(
            curves,
            range(k_min, k_top + 1),
            families=family_list,
            seed=np.random.SeedSequence(entropy=[config.seed, n]),
        )
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    _ensure_dir(out_dir)
    write_bic_table(selection.table, _join(out_dir, "bic_table.csv"))
    write_assignments(ids, selection.best_assignment, _join(out_dir, "assignments.csv"))
    best = selection.best_model
    click.echo(
        f"selected K={best.k} family={best.family} bic={best.bic!r} "
        f"(scanned K={k_min}..{k_top}, {len(family_list)} families, {n} curves)"
    )
    click.echo(f"wrote {_join(out_dir, 'bic_table.csv')} and {_join(out_dir, 'assignments.csv')}")


def _ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)


def _join(*parts) -> str:
    return os.path.join(*parts)


@main.command("analyze")
@click.argument("grid_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--nao", "nao_path", type=click.Path(exists=True, dir_okay=False), default=None, help="date,value CSV of a circulation index to regress out.")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True, help="Directory for all output artifacts.")
@click.pass_context
def cmd_analyze(ctx, grid_csv, nao_path, out_dir):
    """Run the full grid pipeline: per-cell trends, bootstraps, clustering.

    Writes cells.csv, curves.csv, results.geojson, bic_table.csv,
    assignments.csv, and manifest.txt under --out-dir.  Exits nonzero and
    lists the failing cells on stderr if any cell errors out.
    """
    config, threads = _settings(ctx)
    try:
        dataset = ingest_grid_csv(grid_csv)
        nao = DailySeries.from_csv(nao_path) if nao_path else None
    except (TrendbootError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    results, selection, failures, notes = run_grid_analysis(dataset, nao, config, threads=threads)

    _ensure_dir(out_dir)
    write_results_csv(results, _join(out_dir, "cells.csv"))
    write_curves_csv(results, _join(out_dir, "curves.csv"))
    write_results_geojson(results, _join(out_dir, "results.geojson"))
    if selection is not None:
        clustered = [r for r in results if r.cluster_label is not None]
        write_bic_table(selection.table, _join(out_dir, "bic_table.csv"))
        write_assignments(
            [r.cell_id for r in clustered],
            selection.best_assignment,
            _join(out_dir, "assignments.csv"),
        )
    else:
        write_bic_table([], _join(out_dir, "bic_table.csv"))
        write_assignments([], _empty_assignment(), _join(out_dir, "assignments.csv"))

    n_excluded = sum(1 for r in results if r.excluded)
    manifest = {f"config.{key}": value for key, value in config.to_items()}
    manifest.update(
        {
            "command": "analyze",
            "input.grid": str(grid_csv),
            "input.nao": str(nao_path) if nao_path else "",
            "cells.total": str(len(results)),
            "cells.excluded": str(n_excluded),
            "cells.failed": str(len(failures)),
            "notes": "; ".join(notes),
            "versions.python": ".".join(str(v) for v in sys.version_info[:3]),
            "versions.numpy": np.__version__,
            "versions.scipy": scipy.__version__,
            "versions.scikit-learn": sklearn.__version__,
            "versions.click": importlib.metadata.version("click"),
            "versions.trendboot": __version__,
        }
    )
    with open(_join(out_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
        for key in sorted(manifest):
            fh.write(f"{key}={manifest[key]}\n")

    for note in notes:
        click.echo(note)
    click.echo(
        f"analyzed {len(results)} cells ({n_excluded} excluded, {len(failures)} failed); "
        f"artifacts in {out_dir}"
    )
    if failures:
        click.echo("failed cells:", err=True)
        for cell_id, message in failures:
            click.echo(f"  {cell_id}: {message}", err=True)
        ctx.exit(1)


def _empty_assignment() -> ClusterAssignment:
    return ClusterAssignment(labels=np.zeros(0, dtype=int), responsibilities=np.zeros((0, 1)))


if __name__ == "__main__":
    main()
