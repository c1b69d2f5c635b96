"""Gridded-dataset ingestion, per-cell analysis, and result export.

Each grid cell carries one daily series.  The per-cell pipeline is:
seasonal standardization, optional regression on a circulation index,
sliding-start trend curve, and a dependent-multiplier bootstrap of the
slopes at two start-year offsets (the "is warming accelerating" test).
Complete coefficient curves are then clustered across cells.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import multiprocessing
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_trend
from .config import AnalysisConfig
from .exceptions import IntegrityError, ParseError, TrendbootError
from .mixture import ModelSelection, select_model
from .series import DailySeries, nao_adjust, standardize_seasonal
from .trend import CoefficientCurve, segment_by_years, sliding_trend_curve
from .validation import check_positive_int

__all__ = [
    "CellResult",
    "GridDataset",
    "acceleration_significance",
    "analyze_cell",
    "cell_seed",
    "ingest_grid_csv",
    "read_results_csv",
    "run_grid_analysis",
    "write_curves_csv",
    "write_results_csv",
    "write_results_geojson",
]

RESULT_COLUMNS = (
    "cell_id",
    "lat",
    "lon",
    "max_coeff",
    "r2_max",
    "sig_fraction",
    "p_nonpositive",
    "cluster",
)


@dataclass
class GridDataset:
    """Per-cell daily series with cell coordinates.

    ``cells`` holds ``(cell_id, lat, lon)`` sorted by cell id;
    ``resolution`` is the smallest positive coordinate step (0.5 for a
    half-degree grid), or 0.5 when it cannot be inferred.
    """

    cells: list
    series: dict
    resolution: float = 0.5

    def __post_init__(self):
        ids = [c[0] for c in self.cells]
        if len(set(ids)) != len(ids):
            raise IntegrityError("cell ids must be unique")
        for cell_id, lat, lon in self.cells:
            if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
                raise ValueError(f"cell {cell_id!r} has out-of-range coordinates ({lat}, {lon})")


@dataclass
class CellResult:
    """Per-cell outputs of the analysis pipeline.

    ``max_coeff`` is the largest slope over the coefficient curve and
    ``r2_max`` the fit quality of that same segment.  ``sig_fraction`` is
    the fraction of paired bootstrap replicates where the later-start slope
    exceeds the earlier-start slope; ``p_nonpositive`` the fraction of
    non-positive replicates at the earlier offset.  ``slope_replicates``
    maps each compared offset to its replicate vector.  Cells skipped for
    missing data carry ``excluded=True`` and NaN statistics.
    """

    cell_id: str
    lat: float
    lon: float
    curve: CoefficientCurve | None = None
    max_coeff: float = float("nan")
    r2_max: float = float("nan")
    sig_fraction: float = float("nan")
    p_nonpositive: float = float("nan")
    cluster_label: int | None = None
    excluded: bool = False
    note: str = ""
    slope_replicates: dict = field(default_factory=dict, repr=False)


def _infer_resolution(cells) -> float:
    steps = []
    for axis in (1, 2):
        vals = np.unique([c[axis] for c in cells])
        if len(vals) > 1:
            steps.append(float(np.diff(vals).min()))
    return min(steps) if steps else 0.5


def ingest_grid_csv(path) -> GridDataset:
    """Load ``cell_id,lat,lon,date,value`` rows into per-cell daily series.

    Rows may arrive in any order; absent dates inside a cell's date range
    become missing entries.  Empty value fields mark missing days
    explicitly.  Duplicate (cell, date) pairs and coordinate conflicts
    raise :class:`IntegrityError`; malformed rows raise
    :class:`ParseError` with their line number.
    """
    per_cell: dict = {}
    coords: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty grid file", line_number=1) from None
        if [h.strip() for h in header] != list(RESULT_COLUMNS[:3]) + ["date", "value"]:
            raise ParseError(
                "expected header 'cell_id,lat,lon,date,value', got "
                f"{','.join(header)!r}",
                line_number=1,
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 fields, got {len(row)}", line_number=line_no)
            cell_id = row[0].strip()
            if not cell_id:
                raise ParseError("empty cell_id", line_number=line_no)
            try:
                lat = float(row[1])
                lon = float(row[2])
                day = dt.date.fromisoformat(row[3].strip())
            except ValueError as exc:
                raise ParseError(str(exc), line_number=line_no) from exc
            if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
                raise ParseError(f"coordinates ({lat}, {lon}) out of range", line_number=line_no)
            raw_value = row[4].strip()
            if raw_value:
                try:
                    value = float(raw_value)
                except ValueError as exc:
                    raise ParseError(str(exc), line_number=line_no) from exc
            else:
                value = np.nan
            if cell_id in coords and coords[cell_id] != (lat, lon):
                raise IntegrityError(
                    f"cell {cell_id!r} listed with conflicting coordinates "
                    f"{coords[cell_id]} and {(lat, lon)}"
                )
            coords[cell_id] = (lat, lon)
            days = per_cell.setdefault(cell_id, {})
            if day in days:
                raise IntegrityError(f"duplicate entry for cell {cell_id!r} on {day}")
            days[day] = value
    if not per_cell:
        raise ParseError("grid file contains no data rows", line_number=1)

    series = {}
    cells = []
    for cell_id in sorted(per_cell):
        days = per_cell[cell_id]
        start, end = min(days), max(days)
        n = (end - start).days + 1
        values = np.full(n, np.nan)
        for day, value in days.items():
            values[(day - start).days] = value
        series[cell_id] = DailySeries(start, values)
        lat, lon = coords[cell_id]
        cells.append((cell_id, lat, lon))
    return GridDataset(cells=cells, series=series, resolution=_infer_resolution(cells))


def acceleration_significance(replicates_early, replicates_late) -> float:
    """Fraction of replicate pairs where the later-start slope is larger.

    Pairs replicate ``i`` of the late offset with replicate ``i`` of the
    early offset; ties count one half.  On length mismatch, pairs up to the
    shorter length and emits a warning.
    """
    early = np.asarray(replicates_early, dtype=float).ravel()
    late = np.asarray(replicates_late, dtype=float).ravel()
    if len(early) == 0 or len(late) == 0:
        raise ValueError("replicate sets must be non-empty")
    if len(early) != len(late):
        warnings.warn(
            f"pairing {len(late)} late vs {len(early)} early replicates by the "
            "shorter length",
            stacklevel=2,
        )
        m = min(len(early), len(late))
        early, late = early[:m], late[:m]
    return float(np.mean((late > early) + 0.5 * (late == early)))


def cell_seed(master_seed: int, cell_id: str) -> np.random.SeedSequence:
    """Deterministic per-cell seed stream, stable under cell scheduling.

    The cell id is folded into the entropy through a cryptographic hash so
    unrelated cell names cannot collide on nearby streams.
    """
    digest = hashlib.sha256(cell_id.encode("utf-8")).digest()
    fold = int.from_bytes(digest[:8], "big")
    return np.random.SeedSequence(entropy=[master_seed & ((1 << 64) - 1), fold])


def analyze_cell(
    series: DailySeries,
    nao: DailySeries | None,
    config: AnalysisConfig,
    cell_id: str = "cell",
    lat: float = 0.0,
    lon: float = 0.0,
) -> CellResult:
    """Run the full single-cell pipeline and bundle the outputs.

    Standardizes the annual cycle, optionally removes the part explained by
    a circulation index, fits the sliding-start trend curve, and bootstraps
    the slope at the two compared offsets with the AR(1)-multiplier method.
    Errors from any stage are re-raised tagged with the cell id.
    """
    try:
        standardized, _ = standardize_seasonal(series, span=config.span)
        if nao is not None:
            standardized = nao_adjust(standardized, nao)
        years = standardized.years
        first_year, last_year = int(years[0]), int(years[-1])
        curve = sliding_trend_curve(standardized, first_year, last_year, k_max=config.k_max)

        seed_root = cell_seed(config.seed, cell_id)
        replicates = {}
        for offset_index, k in enumerate(config.k_compare):
            seg = segment_by_years(standardized, first_year + k, last_year)
            boot = bootstrap_trend(
                seg.values,
                BootstrapConfig(
                    method="dep_wild_ar1",
                    replicates=config.replicates,
                    seed=np.random.SeedSequence(
                        entropy=seed_root.entropy, spawn_key=(offset_index,)
                    ),
                ),
                missing_mask=seg.missing_mask,
            )
            replicates[k] = boot.slope_replicates
    except TrendbootError as exc:
        raise type(exc)(f"cell {cell_id!r}: {exc}") from exc

    early, late = config.k_compare
    best = int(np.nanargmax(curve.coeffs))
    return CellResult(
        cell_id=cell_id,
        lat=lat,
        lon=lon,
        curve=curve,
        max_coeff=float(curve.coeffs[best]),
        r2_max=float(curve.r_squareds[best]),
        sig_fraction=acceleration_significance(replicates[early], replicates[late]),
        p_nonpositive=float(np.mean(replicates[early] <= 0.0)),
        slope_replicates=replicates,
    )


def _cell_worker(args):
    """Top-level worker so per-cell analysis can run in a process pool."""
    series, nao, config, cell_id, lat, lon = args
    try:
        return "ok", analyze_cell(series, nao, config, cell_id, lat, lon)
    except TrendbootError as exc:
        return "err", (cell_id, lat, lon, str(exc))


def run_grid_analysis(
    dataset: GridDataset,
    nao: DailySeries | None,
    config: AnalysisConfig,
    threads: int = 1,
):
    """Analyze every cell, then cluster the complete coefficient curves.

    Returns ``(results, selection, failures, notes)``: per-cell results
    sorted by cell id, the clustering ModelSelection (or None when
    clustering was infeasible or any cell failed), a list of
    ``(cell_id, error message)`` pairs, and human-readable run notes.
    Cells whose missing-day fraction exceeds the configured threshold are
    excluded up front; cells that fail mid-pipeline are reported in
    ``failures`` without stopping the run.  With ``threads > 1`` the cells
    are analyzed in a process pool; cell seeds are derived from ids, so
    results do not depend on the worker count.
    """
    check_positive_int(threads, "threads")
    results: list[CellResult | None] = []
    failures = []
    notes = []
    tasks = []
    for cell_id, lat, lon in dataset.cells:
        series = dataset.series[cell_id]
        if series.missing_fraction > config.missing_threshold:
            results.append(
                CellResult(
                    cell_id=cell_id,
                    lat=lat,
                    lon=lon,
                    excluded=True,
                    note=(
                        f"excluded: missing fraction {series.missing_fraction:.3f} "
                        f"exceeds threshold {config.missing_threshold}"
                    ),
                )
            )
            continue
        results.append(None)
        tasks.append((len(results) - 1, (series, nao, config, cell_id, lat, lon)))

    if threads > 1 and len(tasks) > 1:
        with multiprocessing.Pool(processes=min(threads, len(tasks))) as pool:
            outcomes = pool.map(_cell_worker, [args for _, args in tasks])
    else:
        outcomes = [_cell_worker(args) for _, args in tasks]

    for (slot, _), (kind, payload) in zip(tasks, outcomes):
        if kind == "ok":
            results[slot] = payload
        else:
            cell_id, lat, lon, message = payload
            failures.append((cell_id, message))
            results[slot] = CellResult(
                cell_id=cell_id, lat=lat, lon=lon, excluded=True, note=f"failed: {message}"
            )

    complete = [
        r
        for r in results
        if not r.excluded and r.curve is not None and not np.isnan(r.curve.coeffs).any()
    ]
    selection = None
    if complete:
        curves = np.vstack([r.curve.coeffs for r in complete])
        d = curves.shape[1]
        k_feasible = len(complete) // (d + 1)
        if k_feasible >= 1:
            k_top = min(config.cluster_k_max, k_feasible)
            selection = select_model(
                curves,
                range(1, k_top + 1),
                seed=np.random.SeedSequence(entropy=[config.seed, len(complete)]),
            )
            for r, label in zip(complete, selection.best_assignment.labels):
                r.cluster_label = int(label)
            notes.append(
                f"clustering: scanned K=1..{k_top} over {len(complete)} curves, "
                f"selected K={selection.best_model.k} family={selection.best_model.family}"
            )
        else:
            notes.append(
                f"clustering: skipped ({len(complete)} complete curves, need at least "
                f"{d + 1} for one component of dimension {d})"
            )
    else:
        notes.append("clustering: skipped (no complete coefficient curves)")
    return results, selection, failures, notes


def _format_float(value) -> str:
    if value is None:
        return ""
    value = float(value)
    if np.isnan(value):
        return ""
    return repr(value)


def write_results_csv(results, path) -> None:
    """Write per-cell results with header ``cell_id,lat,lon,max_coeff,...``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in sorted(results, key=lambda r: r.cell_id):
            writer.writerow(
                [
                    r.cell_id,
                    _format_float(r.lat),
                    _format_float(r.lon),
                    _format_float(r.max_coeff),
                    _format_float(r.r2_max),
                    _format_float(r.sig_fraction),
                    _format_float(r.p_nonpositive),
                    "" if r.cluster_label is None else str(r.cluster_label),
                ]
            )


def read_results_csv(path) -> list:
    """Parse a results CSV back into a list of per-cell dicts."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != list(RESULT_COLUMNS):
            raise ParseError(f"unexpected results header {header!r}", line_number=1)
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(RESULT_COLUMNS):
                raise ParseError(f"expected {len(RESULT_COLUMNS)} fields", line_number=line_no)
            rec = {"cell_id": row[0]}
            for name, raw in zip(RESULT_COLUMNS[1:7], row[1:7]):
                rec[name] = float(raw) if raw else float("nan")
            rec["cluster"] = int(row[7]) if row[7] else None
            out.append(rec)
    return out


def write_results_geojson(results, path) -> None:
    """Write results as a GeoJSON FeatureCollection of points (lon, lat)."""
    features = []
    for r in sorted(results, key=lambda r: r.cell_id):
        def _num(value):
            value = float(value)
            return None if np.isnan(value) else value

        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(r.lon), float(r.lat)]},
                "properties": {
                    "cell_id": r.cell_id,
                    "max_coeff": _num(r.max_coeff),
                    "r2_max": _num(r.r2_max),
                    "sig_fraction": _num(r.sig_fraction),
                    "p_nonpositive": _num(r.p_nonpositive),
                    "cluster": r.cluster_label,
                },
            }
        )
    payload = {"type": "FeatureCollection", "features": features}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_curves_csv(results, path) -> None:
    """Write the per-cell coefficient curves as ``cell_id,k,slope,r_squared``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_id", "k", "slope", "r_squared"])
        for r in sorted(results, key=lambda r: r.cell_id):
            if r.curve is None:
                continue
            for k in range(r.curve.k_max):
                writer.writerow(
                    [
                        r.cell_id,
                        str(k),
                        _format_float(r.curve.coeffs[k]),
                        _format_float(r.curve.r_squareds[k]),
                    ]
                )
