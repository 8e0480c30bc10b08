"""Core domain types for EV charging dispatch under segmented network tariffs.

Units are kW, kWh, hours and EUR throughout.  Timestamps are timezone-aware
UTC datetimes; naive datetimes are interpreted as UTC.  All container types
are frozen dataclasses and safe to share across threads after construction;
numpy arrays they hold are marked read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

__all__ = [
    "ConfigurationError",
    "ValidationError",
    "TimeGrid",
    "ChargingSession",
    "ClipReport",
    "SessionWindow",
    "SegmentedTariff",
    "PriceSeries",
    "PowerProfile",
    "make_time_grid",
    "validate_session",
    "segmented_step_cost",
    "derive_segment_price_from_quantile",
    "as_utc",
]

# Snap tolerance for step-boundary arithmetic, in hours.
_TIME_EPS_H = 1e-9


class ConfigurationError(ValueError):
    """Raised for inconsistent grids, tariffs, prices or scenario settings."""


class ValidationError(ValueError):
    """Raised for session data that cannot be placed on the requested grid."""


def as_utc(instant: datetime) -> datetime:
    """Return ``instant`` as an aware UTC datetime (naive input means UTC)."""
    if instant.tzinfo is None:
        return instant.replace(tzinfo=timezone.utc)
    return instant.astimezone(timezone.utc)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Uniform discretization of a dispatch horizon.

    Attributes:
        start: first step's start instant (UTC).
        step_hours: step length in hours (0.25 for a 15-minute grid).
        n_steps: number of steps; the horizon ends at
            ``start + n_steps * step_hours``.
    """

    start: datetime
    step_hours: float
    n_steps: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", as_utc(self.start))
        if self.step_hours <= 0:
            raise ConfigurationError(f"step_hours must be positive, got {self.step_hours}")
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be at least 1, got {self.n_steps}")

    @property
    def end(self) -> datetime:
        return self.start + timedelta(hours=self.step_hours * self.n_steps)

    @property
    def total_hours(self) -> float:
        return self.step_hours * self.n_steps

    def offset_hours(self, instant: datetime) -> float:
        """Hours from grid start to ``instant`` (negative if before)."""
        return (as_utc(instant) - self.start).total_seconds() / 3600.0

    def time_at(self, step: int) -> datetime:
        """Start instant of step ``step``."""
        return self.start + timedelta(hours=step * self.step_hours)

    def index_of(self, instant: datetime) -> int:
        """Index of the step whose interval contains ``instant``.

        Instants exactly on a boundary belong to the step that starts there.
        The result is not range-checked.
        """
        return int(math.floor(self.offset_hours(instant) / self.step_hours + _TIME_EPS_H))

    def step_offsets_hours(self) -> np.ndarray:
        """Step start offsets from grid start, in hours, shape (n_steps,)."""
        return np.arange(self.n_steps) * self.step_hours


def make_time_grid(start: datetime, end: datetime, step_hours: float) -> TimeGrid:
    """Build a :class:`TimeGrid` covering ``[start, end)``.

    The horizon length must be an integer number of steps (to within
    1e-9 hours), otherwise a :class:`ConfigurationError` is raised.
    """
    start = as_utc(start)
    end = as_utc(end)
    if end <= start:
        raise ConfigurationError(f"grid end {end.isoformat()} is not after start {start.isoformat()}")
    if step_hours <= 0:
        raise ConfigurationError(f"step_hours must be positive, got {step_hours}")
    total_h = (end - start).total_seconds() / 3600.0
    n = round(total_h / step_hours)
    if n < 1 or abs(n * step_hours - total_h) > _TIME_EPS_H:
        raise ConfigurationError(
            f"horizon of {total_h} h is not divisible by step_hours={step_hours}"
        )
    return TimeGrid(start=start, step_hours=step_hours, n_steps=int(n))


@dataclass(frozen=True)
class ChargingSession:
    """One plug-in event at a charge point.

    Attributes:
        session_id: unique identifier of the event.
        cp_id: identifier of the charge point serving it.
        arrival: plug-in instant (UTC).
        departure: plug-out instant (UTC), strictly after arrival.
        max_power_kw: maximum charging power of the EV/EVSE pair.
        energy_kwh: requested energy; may exceed what the connection
            window physically allows, in which case it is clipped when the
            session is placed on a grid (see :func:`validate_session`).
    """

    session_id: str
    cp_id: str
    arrival: datetime
    departure: datetime
    max_power_kw: float
    energy_kwh: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "arrival", as_utc(self.arrival))
        object.__setattr__(self, "departure", as_utc(self.departure))
        if self.departure <= self.arrival:
            raise ValidationError(
                f"session {self.session_id}: departure must be after arrival"
            )
        if not (self.max_power_kw > 0):
            raise ValidationError(f"session {self.session_id}: max_power_kw must be positive")
        if not (self.energy_kwh > 0):
            raise ValidationError(f"session {self.session_id}: energy_kwh must be positive")

    @property
    def duration_hours(self) -> float:
        return (self.departure - self.arrival).total_seconds() / 3600.0


@dataclass(frozen=True)
class ClipReport:
    """Outcome of placing a session on a grid.

    ``clipped`` is set when the requested energy exceeded the deliverable
    bound and was reduced; ``truncated`` when the connection interval was
    cut at the horizon edges.
    """

    session_id: str
    requested_kwh: float
    granted_kwh: float
    clipped: bool
    truncated: bool


@dataclass(frozen=True, eq=False)
class SessionWindow:
    """A session mapped onto a grid, ready for dispatch.

    Attributes:
        session: the source session.
        grid: the dispatch grid.
        first_step: index of the first step with nonzero availability.
        availability: connected fraction of each step, window-local array of
            length ``last_step - first_step + 1``; interior steps are 1.0 and
            only the boundary steps may be fractional.
        energy_kwh: energy to deliver, after clipping to the deliverable
            bound ``max_power_kw * connected_hours``.
        max_power_kw: usable power, the session's own maximum lowered to any
            external cap passed to :func:`validate_session`.
    """

    session: ChargingSession
    grid: TimeGrid
    first_step: int
    availability: np.ndarray
    energy_kwh: float
    max_power_kw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "availability", _readonly(self.availability))

    @property
    def last_step(self) -> int:
        return self.first_step + len(self.availability) - 1

    @property
    def n_steps(self) -> int:
        return len(self.availability)

    @property
    def connected_hours(self) -> float:
        return float(self.availability.sum()) * self.grid.step_hours

    @property
    def step_power_caps_kw(self) -> np.ndarray:
        """Per-step mean-power cap: max_power_kw scaled by availability."""
        return self.max_power_kw * self.availability


def validate_session(
    session: ChargingSession,
    grid: TimeGrid,
    power_cap_kw: float | None = None,
) -> tuple[SessionWindow, ClipReport]:
    """Place ``session`` on ``grid`` and clip its energy to what fits.

    The connection interval is truncated to the grid horizon.  Boundary
    steps get fractional availability; no snapping to step edges is done.
    ``power_cap_kw`` optionally lowers the usable power below the session's
    own maximum (e.g. to a connection capacity).

    Returns the dispatchable window plus a :class:`ClipReport`.  Sessions
    with no overlap with the horizon raise :class:`ValidationError`.
    """
    arr_off = grid.offset_hours(session.arrival)
    dep_off = grid.offset_hours(session.departure)
    horizon_h = grid.total_hours
    if dep_off <= _TIME_EPS_H or arr_off >= horizon_h - _TIME_EPS_H:
        raise ValidationError(
            f"session {session.session_id}: no overlap with grid horizon "
            f"[{grid.start.isoformat()}, {grid.end.isoformat()})"
        )
    truncated = arr_off < -_TIME_EPS_H or dep_off > horizon_h + _TIME_EPS_H
    lo = max(arr_off, 0.0)
    hi = min(dep_off, horizon_h)

    step = grid.step_hours
    first = int(math.floor(lo / step + _TIME_EPS_H))
    last = int(math.ceil(hi / step - _TIME_EPS_H)) - 1
    first = max(first, 0)
    last = min(last, grid.n_steps - 1)
    if last < first:
        raise ValidationError(f"session {session.session_id}: empty window after truncation")

    idx = np.arange(first, last + 1)
    starts = idx * step
    overlap = np.minimum(hi, starts + step) - np.maximum(lo, starts)
    avail = np.clip(overlap / step, 0.0, 1.0)
    avail[avail < _TIME_EPS_H] = 0.0
    avail[avail > 1.0 - _TIME_EPS_H] = 1.0

    power = session.max_power_kw if power_cap_kw is None else min(session.max_power_kw, power_cap_kw)
    deliverable = power * float(avail.sum()) * step
    clipped = session.energy_kwh > deliverable + 1e-9
    granted = min(session.energy_kwh, deliverable)

    window = SessionWindow(
        session=session,
        grid=grid,
        first_step=first,
        availability=avail,
        energy_kwh=granted,
        max_power_kw=power,
    )
    report = ClipReport(
        session_id=session.session_id,
        requested_kwh=session.energy_kwh,
        granted_kwh=granted,
        clipped=clipped,
        truncated=truncated,
    )
    return window, report


@dataclass(frozen=True)
class SegmentedTariff:
    """Volumetric network tariff with stacked power segments.

    Power drawn at any instant is billed by splitting it bottom-up across
    the segments: the first ``widths[0]`` kW fall in segment 0, the next
    ``widths[1]`` kW in segment 1, and so on.  Segment prices are EUR per
    kWh and must be nondecreasing from bottom to top.
    """

    segment_widths_kw: tuple[float, ...]
    segment_prices_eur_per_kwh: tuple[float, ...]

    def __post_init__(self) -> None:
        widths = tuple(float(w) for w in self.segment_widths_kw)
        prices = tuple(float(p) for p in self.segment_prices_eur_per_kwh)
        object.__setattr__(self, "segment_widths_kw", widths)
        object.__setattr__(self, "segment_prices_eur_per_kwh", prices)
        if len(widths) == 0:
            raise ConfigurationError("tariff needs at least one segment")
        if len(widths) != len(prices):
            raise ConfigurationError(
                f"{len(widths)} widths but {len(prices)} prices"
            )
        if any(w <= 0 for w in widths):
            raise ConfigurationError(f"segment widths must be positive, got {widths}")
        if any(p < 0 for p in prices):
            raise ConfigurationError(f"segment prices must be nonnegative, got {prices}")
        if any(b < a for a, b in zip(prices, prices[1:])):
            raise ConfigurationError(
                f"segment prices must be nondecreasing bottom-up, got {prices}"
            )

    @classmethod
    def from_thresholds(
        cls, cumulative_thresholds_kw: tuple[float, ...] | list[float],
        prices_eur_per_kwh: tuple[float, ...] | list[float],
    ) -> "SegmentedTariff":
        """Build from cumulative power thresholds instead of widths.

        ``[4, 12, 23]`` means segments of width 4, 8 and 11 kW.
        """
        thr = [float(x) for x in cumulative_thresholds_kw]
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise ConfigurationError(
                f"cumulative thresholds must be strictly increasing, got {thr}"
            )
        widths = [thr[0]] + [b - a for a, b in zip(thr, thr[1:])]
        return cls(tuple(widths), tuple(float(p) for p in prices_eur_per_kwh))

    @property
    def n_segments(self) -> int:
        return len(self.segment_widths_kw)

    @property
    def total_capacity_kw(self) -> float:
        return float(sum(self.segment_widths_kw))

    @property
    def cumulative_thresholds_kw(self) -> tuple[float, ...]:
        out, acc = [], 0.0
        for w in self.segment_widths_kw:
            acc += w
            out.append(acc)
        return tuple(out)

    def effective_segment_caps_kw(self, max_power_kw: float) -> np.ndarray:
        """Per-segment power available to a device capped at ``max_power_kw``.

        Segments fill bottom-up, so segment s can carry at most
        ``min(width_s, max_power - sum of lower widths)`` (never negative).
        """
        widths = np.asarray(self.segment_widths_kw)
        below = np.concatenate(([0.0], np.cumsum(widths)[:-1]))
        return np.clip(max_power_kw - below, 0.0, widths)


def segmented_step_cost(
    power_kw: float,
    tariff: SegmentedTariff,
    step_hours: float,
) -> tuple[float, np.ndarray]:
    """Cheapest billing of ``power_kw`` held for one step under ``tariff``.

    Splits the power bottom-up across segments (optimal because prices are
    nondecreasing) and returns ``(cost_eur, per_segment_kw)`` where the cost
    is ``sum(price_s * power_s * step_hours)``.

    Raises :class:`ValidationError` if the power is negative or exceeds the
    tariff's total capacity (beyond float dust).
    """
    if power_kw < -1e-9:
        raise ValidationError(f"power must be nonnegative, got {power_kw}")
    if power_kw > tariff.total_capacity_kw + 1e-9:
        raise ValidationError(
            f"power {power_kw} kW exceeds tariff capacity {tariff.total_capacity_kw} kW"
        )
    widths = np.asarray(tariff.segment_widths_kw)
    below = np.concatenate(([0.0], np.cumsum(widths)[:-1]))
    split = np.clip(power_kw - below, 0.0, widths)
    prices = np.asarray(tariff.segment_prices_eur_per_kwh)
    cost = float(np.dot(prices, split)) * step_hours
    return cost, split


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Hourly day-ahead energy prices in EUR per kWh.

    Attributes:
        grid: hourly grid the prices live on (``step_hours == 1``).
        prices_eur_per_kwh: one price per hour, finite.
    """

    grid: TimeGrid
    prices_eur_per_kwh: np.ndarray

    def __post_init__(self) -> None:
        prices = _readonly(self.prices_eur_per_kwh)
        object.__setattr__(self, "prices_eur_per_kwh", prices)
        if abs(self.grid.step_hours - 1.0) > 1e-12:
            raise ConfigurationError("price series must be hourly (step_hours == 1)")
        if len(prices) != self.grid.n_steps:
            raise ConfigurationError(
                f"{len(prices)} prices for {self.grid.n_steps} hours"
            )
        if not np.all(np.isfinite(prices)):
            raise ConfigurationError("prices must be finite")

    @classmethod
    def hourly(cls, start: datetime, values) -> "PriceSeries":
        values = np.asarray(values, dtype=float)
        grid = TimeGrid(start=start, step_hours=1.0, n_steps=len(values))
        return cls(grid=grid, prices_eur_per_kwh=values)

    @property
    def n_hours(self) -> int:
        return self.grid.n_steps

    def covers(self, grid: TimeGrid) -> bool:
        return (
            self.grid.offset_hours(grid.start) > -_TIME_EPS_H
            and self.grid.offset_hours(grid.end) < self.n_hours + _TIME_EPS_H
        )

    def step_values(self, grid: TimeGrid, first_step: int = 0, n_steps: int | None = None) -> np.ndarray:
        """Prices resampled onto ``grid`` steps by repetition within each hour.

        Only the slice ``[first_step, first_step + n_steps)`` is materialized,
        so window-sized extractions stay cheap on year-long grids.
        """
        if n_steps is None:
            n_steps = grid.n_steps - first_step
        base = self.grid.offset_hours(grid.start)
        offsets = base + (first_step + np.arange(n_steps)) * grid.step_hours
        idx = np.floor(offsets + _TIME_EPS_H).astype(int)
        if len(idx) and (idx[0] < 0 or idx[-1] >= self.n_hours):
            bad = grid.time_at(first_step if idx[0] < 0 else first_step + len(idx) - 1)
            raise ConfigurationError(
                f"price series does not cover {bad.isoformat()} "
                f"(series spans [{self.grid.start.isoformat()}, {self.grid.end.isoformat()}))"
            )
        return self.prices_eur_per_kwh[idx]


def derive_segment_price_from_quantile(prices: PriceSeries, q: float) -> float:
    """Quantile ``q`` of an hourly price series, as a segment price anchor.

    Uses linear interpolation between order statistics (index ``q * (n-1)``).
    """
    if not (0.0 <= q <= 1.0):
        raise ConfigurationError(f"quantile must lie in [0, 1], got {q}")
    if prices.n_hours == 0:
        raise ConfigurationError("cannot take a quantile of an empty price series")
    return float(np.quantile(prices.prices_eur_per_kwh, q))


@dataclass(frozen=True, eq=False)
class PowerProfile:
    """Dispatch result for one session: mean power per occupied grid step.

    The array is window-local; steps outside ``[first_step, last_step]``
    carry zero power.  ``segment_power_kw`` (steps x segments), present for
    tariff-aware dispatches, records how each step's power splits across
    tariff segments.
    """

    grid: TimeGrid
    session_id: str
    cp_id: str
    first_step: int
    power_kw: np.ndarray
    segment_power_kw: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "power_kw", _readonly(self.power_kw))
        if self.segment_power_kw is not None:
            object.__setattr__(self, "segment_power_kw", _readonly(self.segment_power_kw))
            if self.segment_power_kw.shape[0] != len(self.power_kw):
                raise ValidationError("segment_power_kw rows must match power_kw length")

    @property
    def last_step(self) -> int:
        return self.first_step + len(self.power_kw) - 1

    @property
    def peak_kw(self) -> float:
        return float(self.power_kw.max(initial=0.0))

    def energy_kwh(self) -> float:
        return float(self.power_kw.sum()) * self.grid.step_hours

    def cumulative_energy_kwh(self) -> np.ndarray:
        """Energy delivered by the end of each window step."""
        return np.cumsum(self.power_kw) * self.grid.step_hours

    def dense_power_kw(self) -> np.ndarray:
        """Full-grid power array (zeros outside the window)."""
        out = np.zeros(self.grid.n_steps)
        out[self.first_step : self.last_step + 1] = self.power_kw
        return out

    def add_into(self, out: np.ndarray) -> None:
        """Accumulate this profile into a full-grid power array."""
        out[self.first_step : self.last_step + 1] += self.power_kw
