"""File ingestion, synthetic data generation and result serialization."""

from .timefmt import format_utc, parse_utc
from .sessions import (
    SESSION_COLUMNS,
    RejectedRow,
    SessionLoadResult,
    load_sessions,
    write_sessions,
)
from .prices import PRICE_TIME_COLUMN, load_prices, make_synthetic_prices, write_prices
from .synthetic import (
    ArrivalComponent,
    SyntheticFleetParams,
    generate_synthetic_fleet,
    reference_fleet_params,
)
from .results import (
    CostTable,
    ProfileTable,
    SessionCost,
    profile_table,
    read_cost_table,
    read_peak_study,
    read_profile_table,
    read_quantile_profile,
    session_cost_table,
    write_results,
)
from .scenario import (
    PRESET_ALIASES,
    ScenarioConfig,
    StudySettings,
    list_presets,
    load_preset,
    load_scenario,
    parse_scenario,
)

__all__ = [
    "format_utc",
    "parse_utc",
    "SESSION_COLUMNS",
    "RejectedRow",
    "SessionLoadResult",
    "load_sessions",
    "write_sessions",
    "PRICE_TIME_COLUMN",
    "load_prices",
    "make_synthetic_prices",
    "write_prices",
    "ArrivalComponent",
    "SyntheticFleetParams",
    "generate_synthetic_fleet",
    "reference_fleet_params",
    "CostTable",
    "ProfileTable",
    "SessionCost",
    "profile_table",
    "read_cost_table",
    "read_peak_study",
    "read_profile_table",
    "read_quantile_profile",
    "session_cost_table",
    "write_results",
    "PRESET_ALIASES",
    "ScenarioConfig",
    "StudySettings",
    "list_presets",
    "load_preset",
    "load_scenario",
    "parse_scenario",
]
