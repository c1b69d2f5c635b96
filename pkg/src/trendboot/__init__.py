"""Trend-slope bootstrap toolkit for daily climate-style series.

Seasonal standardization, sliding-window trend fits, five residual
bootstraps for slope uncertainty (including serially dependent multiplier
schemes), automatic block-length and multiplier-parameter selection,
model-based clustering of per-cell trend curves, and a gridded end-to-end
analysis pipeline with a command-line front end.
"""

from .ar1 import AR1Fit, ar1_mean_variance, fit_ar1, simulate_ar1_trend
from .blocklength import politis_white_block_length
from .bootstrap import (
    QUANTILE_LEVELS,
    BootstrapConfig,
    BootstrapResult,
    bootstrap_trend,
    select_ar1_weight_param,
    slope_significance,
)
from .config import AnalysisConfig, parse_config_file
from .exceptions import (
    CollinearityError,
    CoverageError,
    DegenerateComponentError,
    DegenerateVarianceError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
    TrendbootError,
)
from .grid import (
    CellResult,
    GridDataset,
    acceleration_significance,
    analyze_cell,
    ingest_grid_csv,
    read_results_csv,
    run_grid_analysis,
    write_curves_csv,
    write_results_csv,
    write_results_geojson,
)
from .kmeans import ClusterAssignment, KMeans, kmeans
from .mixture import (
    FAMILIES,
    GaussianMixture,
    MixtureModel,
    ModelSelection,
    em_fit,
    mixture_param_count,
    select_model,
    write_assignments,
    write_bic_table,
)
from .series import (
    DailySeries,
    SeasonalProfile,
    SeasonalStandardizer,
    nao_adjust,
    standardize_seasonal,
)
from .simulate import (
    TABLE1_ROW_ORDER,
    Table1Result,
    Table2Result,
    simulate_table1,
    simulate_table2,
)
from .trend import CoefficientCurve, TrendFit, fit_ols_trend, segment_by_years, sliding_trend_curve
from .weights import WeightProcess, generate_weights

__version__ = "0.1.0"

__all__ = [
    "AR1Fit",
    "AnalysisConfig",
    "BootstrapConfig",
    "BootstrapResult",
    "CellResult",
    "ClusterAssignment",
    "CoefficientCurve",
    "CollinearityError",
    "CoverageError",
    "DailySeries",
    "DegenerateComponentError",
    "DegenerateVarianceError",
    "FAMILIES",
    "GaussianMixture",
    "GridDataset",
    "InsufficientDataError",
    "IntegrityError",
    "KMeans",
    "MixtureModel",
    "ModelSelection",
    "ParseError",
    "QUANTILE_LEVELS",
    "SeasonalProfile",
    "SeasonalStandardizer",
    "TABLE1_ROW_ORDER",
    "Table1Result",
    "Table2Result",
    "TrendFit",
    "TrendbootError",
    "WeightProcess",
    "acceleration_significance",
    "analyze_cell",
    "ar1_mean_variance",
    "bootstrap_trend",
    "em_fit",
    "fit_ar1",
    "fit_ols_trend",
    "generate_weights",
    "ingest_grid_csv",
    "kmeans",
    "mixture_param_count",
    "nao_adjust",
    "parse_config_file",
    "politis_white_block_length",
    "read_results_csv",
    "run_grid_analysis",
    "segment_by_years",
    "select_ar1_weight_param",
    "select_model",
    "simulate_ar1_trend",
    "simulate_table1",
    "simulate_table2",
    "sliding_trend_curve",
    "slope_significance",
    "standardize_seasonal",
    "write_assignments",
    "write_bic_table",
    "write_curves_csv",
    "write_results_csv",
    "write_results_geojson",
    "__version__",
]
