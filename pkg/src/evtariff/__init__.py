"""EV charging dispatch under segmented network tariffs.

The package models single-CP charging sessions on a discrete time grid,
dispatches them under four strategies (unoptimized, dynamic energy price,
segmented tariff with flat prices, segmented tariff with dynamic prices),
and aggregates per-CP load into fleet-level statistics such as hour-of-day
quantile profiles and the diversity of annual per-CP peaks.
"""

from .aggregate import (
    SINGLE_CP_CAPACITY_KW,
    AggregateProfile,
    PeakStudyResult,
    QuantileProfile,
    aggregate_profiles,
    cp_load_profiles,
    diversity_factor,
    group_by_cp,
    peak_study,
    quantile_by_hour,
    sample_fleet,
)
from .core import (
    ChargingSession,
    ClipReport,
    ConfigurationError,
    PowerProfile,
    PriceSeries,
    SegmentedTariff,
    SessionWindow,
    TimeGrid,
    ValidationError,
    derive_segment_price_from_quantile,
    make_time_grid,
    segmented_step_cost,
    validate_session,
)
from .dispatch import (
    CostBreakdown,
    DispatchStrategy,
    StrategyKind,
    dispatch,
    dispatch_dynamic,
    dispatch_segmented_dynamic,
    dispatch_segmented_flat,
    dispatch_session,
    dispatch_unoptimized,
    evaluate_cost,
    oracle_dispatch,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AggregateProfile",
    "ChargingSession",
    "ClipReport",
    "ConfigurationError",
    "CostBreakdown",
    "DispatchStrategy",
    "PeakStudyResult",
    "PowerProfile",
    "PriceSeries",
    "QuantileProfile",
    "SINGLE_CP_CAPACITY_KW",
    "SegmentedTariff",
    "SessionWindow",
    "StrategyKind",
    "TimeGrid",
    "ValidationError",
    "aggregate_profiles",
    "cp_load_profiles",
    "derive_segment_price_from_quantile",
    "dispatch",
    "dispatch_dynamic",
    "dispatch_segmented_dynamic",
    "dispatch_segmented_flat",
    "dispatch_session",
    "dispatch_unoptimized",
    "diversity_factor",
    "evaluate_cost",
    "group_by_cp",
    "make_time_grid",
    "oracle_dispatch",
    "peak_study",
    "quantile_by_hour",
    "sample_fleet",
    "segmented_step_cost",
    "validate_session",
]
