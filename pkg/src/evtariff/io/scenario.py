"""Scenario configuration: YAML parsing, presets, strategy resolution.

A scenario bundles a dispatch regime, an optional segmented tariff (whose
middle price may be pegged to a quantile of the energy price series), the
dispatch grid, data sources and study settings.  Eight ready-made presets
ship with the package; ``--scenario`` accepts either a preset alias or a
path to a YAML file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path

import yaml

from ..core import (
    ConfigurationError,
    PriceSeries,
    SegmentedTariff,
    TimeGrid,
    derive_segment_price_from_quantile,
    make_time_grid,
)
from ..dispatch import DispatchStrategy, StrategyKind
from .synthetic import ArrivalComponent, SyntheticFleetParams
from .timefmt import parse_utc

__all__ = [
    "StudySettings",
    "ScenarioConfig",
    "parse_scenario",
    "load_scenario",
    "load_preset",
    "list_presets",
    "PRESET_ALIASES",
]

PRESET_ALIASES = (
    "Unopt",
    "DE",
    "FE-p+",
    "FE-p-",
    "DE-p+λ-",
    "DE-p+λ+",
    "DE-p-λ-",
    "DE-p-λ+",
)

_PRESET_FILES = {
    "Unopt": "unopt.yaml",
    "DE": "de.yaml",
    "FE-p+": "fe_p_plus.yaml",
    "FE-p-": "fe_p_minus.yaml",
    "DE-p+λ-": "de_p_plus_l_minus.yaml",
    "DE-p+λ+": "de_p_plus_l_plus.yaml",
    "DE-p-λ-": "de_p_minus_l_minus.yaml",
    "DE-p-λ+": "de_p_minus_l_plus.yaml",
}

_DEFAULT_LEVELS = (1, 2, 4, 8, 16, 32, 64, 128, 256)
_DEFAULT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class StudySettings:
    """Aggregation study knobs (fleet sizes, repeats, seeding)."""

    levels: tuple[int, ...] = _DEFAULT_LEVELS
    repeats: int = 100
    seed: int = 1
    quantile_levels: tuple[float, ...] = _DEFAULT_QUANTILES
    paired_fleets: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    """One named dispatch scenario, fully describing a run."""

    alias: str
    strategy_kind: StrategyKind
    tariff_widths_kw: tuple[float, ...] | None = None
    tariff_price_spec: tuple[object, ...] | None = None
    grid_start: datetime = datetime(2022, 1, 1)
    grid_end: datetime = datetime(2023, 1, 1)
    step_hours: float = 0.25
    prices_file: str | None = None
    prices_synthetic_seed: int | None = None
    sessions_file: str | None = None
    sessions_synthetic: SyntheticFleetParams | None = None
    study: StudySettings = field(default_factory=StudySettings)
    connection_capacity_kw: float = 23.0

    def __post_init__(self) -> None:
        if self.tariff_widths_kw is not None:
            total = sum(self.tariff_widths_kw)
            if abs(total - self.connection_capacity_kw) > 1e-6:
                raise ConfigurationError(
                    f"scenario {self.alias}: tariff widths sum to {total} kW,"
                    f" expected the {self.connection_capacity_kw} kW connection capacity"
                )
            if self.tariff_price_spec is None or len(self.tariff_price_spec) != len(self.tariff_widths_kw):
                raise ConfigurationError(
                    f"scenario {self.alias}: one price per tariff segment is required"
                )

    @property
    def needs_prices(self) -> bool:
        return self.strategy_kind in (StrategyKind.DYNAMIC_ENERGY, StrategyKind.SEGMENTED_DYNAMIC)

    @property
    def needs_tariff(self) -> bool:
        return self.strategy_kind in (StrategyKind.SEGMENTED_FLAT, StrategyKind.SEGMENTED_DYNAMIC)

    def build_grid(self) -> TimeGrid:
        return make_time_grid(self.grid_start, self.grid_end, self.step_hours)

    def resolve_tariff(self, prices: PriceSeries | None) -> SegmentedTariff | None:
        """Materialize the tariff, resolving ``quantile:q`` price entries."""
        if not self.needs_tariff:
            return None
        if self.tariff_widths_kw is None:
            raise ConfigurationError(f"scenario {self.alias}: strategy needs a tariff")
        resolved: list[float] = []
        for entry in self.tariff_price_spec:
            if isinstance(entry, str):
                if not entry.startswith("quantile:"):
                    raise ConfigurationError(
                        f"scenario {self.alias}: bad segment price {entry!r}"
                    )
                if prices is None:
                    raise ConfigurationError(
                        f"scenario {self.alias}: {entry!r} needs an energy price series"
                    )
                q = float(entry.split(":", 1)[1])
                resolved.append(derive_segment_price_from_quantile(prices, q))
            else:
                resolved.append(float(entry))
        return SegmentedTariff(tuple(self.tariff_widths_kw), tuple(resolved))

    def build_strategy(self, prices: PriceSeries | None) -> DispatchStrategy:
        """Bundle kind, resolved tariff and prices into a strategy."""
        if self.needs_prices and prices is None:
            raise ConfigurationError(
                f"scenario {self.alias}: {self.strategy_kind.value} needs energy prices"
            )
        tariff = self.resolve_tariff(prices)
        return DispatchStrategy(
            kind=self.strategy_kind,
            tariff=tariff,
            prices=prices if self.needs_prices else None,
        )


def _parse_datetime(value) -> datetime:
    if isinstance(value, datetime):
        return value
    if isinstance(value, str):
        return parse_utc(value)
    raise ConfigurationError(f"cannot parse {value!r} as a timestamp")


def _parse_components(raw) -> tuple[ArrivalComponent, ...]:
    out = []
    for item in raw:
        out.append(
            ArrivalComponent(
                weight=float(item["weight"]),
                hour_mean=float(item["hour_mean"]),
                hour_std=float(item["hour_std"]),
                duration_mean_h=float(item["duration_mean_h"]),
                duration_std_h=float(item["duration_std_h"]),
            )
        )
    return tuple(out)


def _parse_synthetic_sessions(raw: dict) -> SyntheticFleetParams:
    params = SyntheticFleetParams()
    known = {f.name for f in dataclasses.fields(SyntheticFleetParams)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown synthetic fleet fields {sorted(unknown)}")
    kwargs = dict(raw)
    if "start" in kwargs:
        kwargs["start"] = _parse_datetime(kwargs["start"])
    if "components" in kwargs:
        kwargs["components"] = _parse_components(kwargs["components"])
    for name in ("max_power_choices_kw", "max_power_weights"):
        if name in kwargs:
            kwargs[name] = tuple(float(x) for x in kwargs[name])
    return dataclasses.replace(params, **kwargs)


def parse_scenario(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed YAML mapping.

    Relative file paths are resolved against ``base_dir``.  The tariff block
    accepts segment widths or cumulative thresholds, and prices that are
    numbers or ``"quantile:q"`` strings.
    """
    if not isinstance(raw, dict):
        raise ConfigurationError("scenario file must contain a mapping")
    try:
        alias = str(raw["alias"])
        kind = StrategyKind(str(raw["strategy"]))
    except KeyError as exc:
        raise ConfigurationError(f"scenario is missing required key {exc}") from exc
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc

    capacity = float(raw.get("connection_capacity_kw", 23.0))

    widths = None
    price_spec = None
    tariff_raw = raw.get("tariff")
    if tariff_raw:
        if "widths_kw" in tariff_raw and "thresholds_kw" in tariff_raw:
            raise ConfigurationError("tariff takes widths_kw or thresholds_kw, not both")
        if "widths_kw" in tariff_raw:
            widths = tuple(float(w) for w in tariff_raw["widths_kw"])
        elif "thresholds_kw" in tariff_raw:
            thr = [float(x) for x in tariff_raw["thresholds_kw"]]
            if any(b <= a for a, b in zip(thr, thr[1:])):
                raise ConfigurationError(
                    f"cumulative thresholds must be strictly increasing, got {thr}"
                )
            widths = tuple([thr[0]] + [b - a for a, b in zip(thr, thr[1:])])
        else:
            raise ConfigurationError("tariff block needs widths_kw or thresholds_kw")
        price_spec = tuple(tariff_raw.get("prices_eur_per_kwh", ()))

    grid_raw = raw.get("grid", {})
    grid_start = _parse_datetime(grid_raw.get("start", datetime(2022, 1, 1)))
    grid_end = _parse_datetime(grid_raw.get("end", datetime(2023, 1, 1)))
    step_hours = float(grid_raw.get("step_hours", 0.25))

    prices_file = None
    prices_seed = None
    prices_raw = raw.get("prices")
    if prices_raw:
        if "file" in prices_raw:
            prices_file = str(prices_raw["file"])
            if base_dir is not None and not Path(prices_file).is_absolute():
                prices_file = str(base_dir / prices_file)
        elif "synthetic" in prices_raw:
            prices_seed = int((prices_raw["synthetic"] or {}).get("seed", 11))
        else:
            raise ConfigurationError("prices block needs file or synthetic")

    sessions_file = None
    sessions_synth = None
    sessions_raw = raw.get("sessions")
    if sessions_raw:
        if "file" in sessions_raw:
            sessions_file = str(sessions_raw["file"])
            if base_dir is not None and not Path(sessions_file).is_absolute():
                sessions_file = str(base_dir / sessions_file)
        elif "synthetic" in sessions_raw:
            sessions_synth = _parse_synthetic_sessions(sessions_raw["synthetic"] or {})
        else:
            raise ConfigurationError("sessions block needs file or synthetic")

    study_raw = raw.get("study", {}) or {}
    study = StudySettings(
        levels=tuple(int(n) for n in study_raw.get("levels", _DEFAULT_LEVELS)),
        repeats=int(study_raw.get("repeats", 100)),
        seed=int(study_raw.get("seed", 1)),
        quantile_levels=tuple(float(q) for q in study_raw.get("quantile_levels", _DEFAULT_QUANTILES)),
        paired_fleets=bool(study_raw.get("paired_fleets", True)),
    )

    return ScenarioConfig(
        alias=alias,
        strategy_kind=kind,
        tariff_widths_kw=widths,
        tariff_price_spec=price_spec,
        grid_start=grid_start,
        grid_end=grid_end,
        step_hours=step_hours,
        prices_file=prices_file,
        prices_synthetic_seed=prices_seed,
        sessions_file=sessions_file,
        sessions_synthetic=sessions_synth,
        study=study,
        connection_capacity_kw=capacity,
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse a scenario YAML file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return parse_scenario(raw, base_dir=path.parent)


def _normalize_alias(alias: str) -> str:
    return alias.replace("λ", "l").replace("Λ", "l").lower()


def load_preset(alias: str) -> ScenarioConfig:
    """Load a built-in scenario by alias (λ may be typed as ``l``)."""
    wanted = _normalize_alias(alias)
    for canonical, filename in _PRESET_FILES.items():
        if _normalize_alias(canonical) == wanted:
            text = (
                resources.files("evtariff").joinpath("presets").joinpath(filename)
            ).read_text(encoding="utf-8")
            return parse_scenario(yaml.safe_load(text))
    raise ConfigurationError(
        f"unknown preset {alias!r}; available: {', '.join(PRESET_ALIASES)}"
    )


def list_presets() -> tuple[str, ...]:
    return PRESET_ALIASES
