"""Hourly price ingestion and a seeded synthetic day-ahead generator."""

from __future__ import annotations

import csv
import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from ..core import ConfigurationError, PriceSeries, TimeGrid, as_utc
from .timefmt import format_utc, parse_utc

__all__ = [
    "PRICE_TIME_COLUMN",
    "load_prices",
    "write_prices",
    "make_synthetic_prices",
]

PRICE_TIME_COLUMN = "hour_start_utc"
_KWH_COLUMN = "price_eur_per_kwh"
_MWH_COLUMN = "price_eur_per_mwh"


def _hour_floor(dt: datetime) -> datetime:
    return dt.replace(minute=0, second=0, microsecond=0)


def load_prices(path: str | Path, grid: TimeGrid) -> PriceSeries:
    """Read hourly prices covering the grid horizon.

    The file needs a ``hour_start_utc`` column plus exactly one of
    ``price_eur_per_kwh`` or ``price_eur_per_mwh`` (the latter is divided
    by 1000).  Rows outside the horizon are ignored; a missing or duplicate
    hour inside it is an error naming the offending hour.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if PRICE_TIME_COLUMN not in header:
            raise ConfigurationError(f"{path}: missing column {PRICE_TIME_COLUMN}")
        has_kwh = _KWH_COLUMN in header
        has_mwh = _MWH_COLUMN in header
        if has_kwh == has_mwh:
            raise ConfigurationError(
                f"{path}: need exactly one of {_KWH_COLUMN} or {_MWH_COLUMN}"
            )
        value_col = _KWH_COLUMN if has_kwh else _MWH_COLUMN
        scale = 1.0 if has_kwh else 1e-3

        by_hour: dict[datetime, float] = {}
        for line_no, row in enumerate(reader, start=2):
            raw_time = (row.get(PRICE_TIME_COLUMN) or "").strip()
            raw_value = (row.get(value_col) or "").strip()
            if not raw_time or not raw_value:
                raise ConfigurationError(f"{path}:{line_no}: empty price row")
            try:
                hour = parse_utc(raw_time)
                value = float(raw_value) * scale
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{line_no}: {exc}") from exc
            if hour != _hour_floor(hour):
                raise ConfigurationError(
                    f"{path}:{line_no}: {raw_time} is not on a whole hour"
                )
            if hour in by_hour:
                raise ConfigurationError(
                    f"{path}: duplicate price for hour {format_utc(hour)}"
                )
            by_hour[hour] = value

    first_hour = _hour_floor(grid.start)
    n_hours = math.ceil(
        (grid.end - first_hour).total_seconds() / 3600.0 - 1e-9
    )
    values = np.empty(n_hours)
    for i in range(n_hours):
        hour = first_hour + timedelta(hours=i)
        if hour not in by_hour:
            raise ConfigurationError(
                f"{path}: no price for hour {format_utc(hour)} (horizon not covered)"
            )
        values[i] = by_hour[hour]
    return PriceSeries.hourly(first_hour, values)


def write_prices(series: PriceSeries, path: str | Path) -> None:
    """Write a price series to CSV in EUR per kWh."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([PRICE_TIME_COLUMN, _KWH_COLUMN])
        for i, value in enumerate(series.prices_eur_per_kwh):
            writer.writerow([format_utc(series.grid.time_at(i)), repr(float(value))])


def make_synthetic_prices(
    start: datetime,
    days: int,
    seed: int = 11,
    base_eur_per_kwh: float = 0.24,
    noise_sigma: float = 0.035,
) -> PriceSeries:
    """Seeded synthetic hourly day-ahead prices with a realistic day shape.

    The daily template has a deep night valley around 03:30 and morning and
    evening peaks; weekends are slightly cheaper and an AR(1) term adds
    persistence.  Values are clipped to stay positive, so the top segment
    price of the built-in tariffs (0.90 EUR/kWh) always exceeds the maximum.
    """
    if days < 1:
        raise ConfigurationError("days must be at least 1")
    start = as_utc(start)
    n = days * 24
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 0x9E3779B9)))

    hours = np.arange(n)
    hod = hours % 24
    dow = ((np.arange(n) // 24) + start.weekday()) % 7
    shape = (
        0.55 * np.exp(-((hod - 19.0) ** 2) / 7.0)
        + 0.35 * np.exp(-((hod - 8.5) ** 2) / 5.0)
        - 0.65 * np.exp(-((hod - 3.5) ** 2) / 9.0)
    )
    weekend = np.where(dow >= 5, 0.92, 1.0)

    ar = np.empty(n)
    acc = 0.0
    innovations = rng.normal(0.0, noise_sigma, size=n)
    for i in range(n):
        acc = 0.9 * acc + innovations[i]
        ar[i] = acc
    seasonal = 1.0 + 0.08 * np.sin(2.0 * np.pi * (hours / 24.0) / 365.0 + 0.5)

    prices = base_eur_per_kwh * (1.0 + shape) * weekend * seasonal + ar
    prices = np.clip(prices, 0.005, None)
    return PriceSeries.hourly(start, prices)
