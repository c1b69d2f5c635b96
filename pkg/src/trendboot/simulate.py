"""Seeded simulation experiments: slope-quantile and significance tables.

Both experiments simulate trended AR(1) daily series and summarize bootstrap
behaviour across many outer replications.  Every outer replication draws
from its own seed substream keyed by its index, so results are identical
for any worker count and processing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ar1 import simulate_ar1_trend
from .bootstrap import QUANTILE_LEVELS, BootstrapConfig, bootstrap_trend
from .trend import fit_ols_trend
from .validation import check_positive_int

__all__ = [
    "TABLE1_ROW_ORDER",
    "Table1Result",
    "Table2Result",
    "simulate_table1",
    "simulate_table2",
]

#: Output rows of the quantile table: the simulated slope-estimator law
#: first, then one bootstrap method per row.
TABLE1_ROW_ORDER = ("ar1_process", "moving_block", "wild", "dep_wild_ar1")

# Bootstrap-method substream indices within one outer replication (0 is the
# series itself).  Fixed so adding workers never shifts any stream.
_TABLE1_STREAMS = {"moving_block": 1, "wild": 2, "dep_wild_ar1": 3}


@dataclass
class Table1Result:
    """Averaged slope quantiles (rows) by probability level (columns)."""

    rows: dict
    levels: tuple = QUANTILE_LEVELS
    outer: int = 0
    inner: int = 0

    def scaled(self, factor: float = 1e5) -> dict:
        return {name: np.asarray(row) * factor for name, row in self.rows.items()}

    def format_table(self) -> str:
        """Human-readable table of the quantiles scaled by 1e5."""
        header = "method".ljust(16) + "".join(f"{lv:>8.3f}" for lv in self.levels)
        lines = [header]
        for name in TABLE1_ROW_ORDER:
            row = np.asarray(self.rows[name]) * 1e5
            lines.append(name.ljust(16) + "".join(f"{v:>8.2f}" for v in row))
        return "\n".join(lines)


@dataclass
class Table2Result:
    """Mean fraction of non-positive slope replicates per series length."""

    fractions: dict
    outer: int = 0
    inner: int = 0
    days_per_year: int = 260

    def format_table(self) -> str:
        lines = ["years    negative replicates (%)"]
        for years in sorted(self.fractions):
            lines.append(f"{years:<9d}{100.0 * self.fractions[years]:.3f}")
        return "\n".join(lines)


def _table1_outer(args) -> tuple:
    """One outer replication: simulate, fit, run the three bootstraps."""
    (i, n, r, trend, innovation_sd, inner, seed) = args
    y = simulate_ar1_trend(
        n, trend, r, innovation_sd, seed=np.random.SeedSequence(entropy=seed, spawn_key=(i, 0))
    )
    slope = fit_ols_trend(y).slope_a
    quantile_rows = {}
    for method, stream in _TABLE1_STREAMS.items():
        result = bootstrap_trend(
            y,
            BootstrapConfig(
                method=method,
                replicates=inner,
                block_length="auto" if method == "moving_block" else None,
                seed=np.random.SeedSequence(entropy=seed, spawn_key=(i, stream)),
            ),
        )
        quantile_rows[method] = np.array([result.quantiles[lv] for lv in QUANTILE_LEVELS])
    return slope, quantile_rows


def _run_ordered(worker, arg_list, threads: int):
    if threads <= 1:
        return [worker(args) for args in arg_list]
    import multiprocessing

    with multiprocessing.Pool(processes=threads) as pool:
        return pool.map(worker, arg_list)


def simulate_table1(
    n: int = 23360,
    r: float = 0.812,
    trend: float = 8.6e-5,
    noise_sd: float = 3.25,
    outer: int = 500,
    inner: int = 500,
    seed: int = 0,
    threads: int = 1,
) -> Table1Result:
    """Slope quantiles of three bootstraps against the simulated truth.

    Simulates ``outer`` series of length ``n`` with slope ``trend`` and
    stationary AR(1) noise (coefficient ``r``, marginal standard deviation
    ``noise_sd``).  The ``ar1_process`` row holds the empirical quantiles
    of the ``outer`` fitted slopes; each bootstrap row averages per-series
    ``inner``-replicate quantiles across the outer runs.
    """
    check_positive_int(outer, "outer")
    check_positive_int(inner, "inner")
    innovation_sd = noise_sd * math.sqrt(1.0 - r * r)
    args = [(i, n, r, trend, innovation_sd, inner, seed) for i in range(outer)]
    outputs = _run_ordered(_table1_outer, args, threads)

    slopes = np.array([slope for slope, _ in outputs])
    rows = {"ar1_process": np.quantile(slopes, QUANTILE_LEVELS)}
    for method in _TABLE1_STREAMS:
        rows[method] = np.mean([qr[method] for _, qr in outputs], axis=0)
    return Table1Result(rows=rows, outer=outer, inner=inner)


def _table2_cell(args) -> float:
    """One simulated series: fraction of non-positive slope replicates."""
    (years, i, n, trend, r, innovation_sd, inner, seed) = args
    y = simulate_ar1_trend(
        n,
        trend,
        r,
        innovation_sd,
        seed=np.random.SeedSequence(entropy=seed, spawn_key=(years, i, 0)),
    )
    result = bootstrap_trend(
        y,
        BootstrapConfig(
            method="dep_wild_ar1",
            replicates=inner,
            seed=np.random.SeedSequence(entropy=seed, spawn_key=(years, i, 1)),
        ),
    )
    return float(np.mean(result.slope_replicates <= 0.0))


def simulate_table2(
    year_counts=(10, 30, 60),
    trend: float = 1e-4,
    r: float = 0.9,
    innovation_sd: float = math.sqrt(0.19),
    days_per_year: int = 260,
    outer: int = 100,
    inner: int = 500,
    seed: int = 0,
    threads: int = 1,
) -> Table2Result:
    """Fraction of non-positive bootstrap slopes by series length in years.

    For each year count, simulates ``outer`` series with the given daily
    trend and AR(1) noise, runs the AR(1)-multiplier bootstrap with
    ``inner`` replicates on each, and averages the per-series fraction of
    non-positive slope replicates — the bootstrap evidence against a
    positive trend, which fades as the series lengthens.
    """
    check_positive_int(outer, "outer")
    check_positive_int(inner, "inner")
    check_positive_int(days_per_year, "days_per_year")
    fractions = {}
    for years in year_counts:
        years = check_positive_int(years, "year count")
        n = years * days_per_year
        args = [(years, i, n, trend, r, innovation_sd, inner, seed) for i in range(outer)]
        per_series = _run_ordered(_table2_cell, args, threads)
        fractions[years] = float(np.mean(per_series))
    return Table2Result(
        fractions=fractions, outer=outer, inner=inner, days_per_year=days_per_year
    )
