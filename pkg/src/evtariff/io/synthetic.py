"""Seeded synthetic charging session generator.

Sessions are drawn per charge point from a bimodal arrival mixture (a
daytime and an evening/overnight component), then overlapping draws at the
same CP are dropped so each CP serves one vehicle at a time.  Requested
energy is always capped by the session's own power-times-duration bound, so
generated sessions never need clipping.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from ..core import ChargingSession, ConfigurationError, as_utc

__all__ = [
    "ArrivalComponent",
    "SyntheticFleetParams",
    "generate_synthetic_fleet",
    "reference_fleet_params",
]


@dataclass(frozen=True)
class ArrivalComponent:
    """One mode of the arrival mixture, with its typical stay length."""

    weight: float
    hour_mean: float
    hour_std: float
    duration_mean_h: float
    duration_std_h: float


@dataclass(frozen=True)
class SyntheticFleetParams:
    """Knobs of the synthetic fleet generator.

    ``mean_sessions_per_cp`` is the Poisson mean of candidate draws per CP
    over the horizon; the kept count is lower because overlapping candidates
    at the same CP are discarded.
    """

    n_cps: int = 256
    start: datetime = datetime(2022, 1, 1, tzinfo=timezone.utc)
    days: int = 365
    mean_sessions_per_cp: float = 220.0
    components: tuple[ArrivalComponent, ...] = (
        ArrivalComponent(weight=0.40, hour_mean=8.5, hour_std=1.8,
                         duration_mean_h=7.0, duration_std_h=2.4),
        ArrivalComponent(weight=0.60, hour_mean=18.0, hour_std=2.2,
                         duration_mean_h=13.5, duration_std_h=3.0),
    )
    energy_median_kwh: float = 11.0
    energy_sigma: float = 0.60
    energy_min_kwh: float = 1.0
    energy_max_kwh: float = 85.0
    max_power_choices_kw: tuple[float, ...] = (3.7, 7.4, 11.0, 22.0)
    max_power_weights: tuple[float, ...] = (0.18, 0.36, 0.32, 0.14)
    min_duration_h: float = 0.5
    max_duration_h: float = 44.0
    min_gap_h: float = 0.05
    seed: int = 1

    def __post_init__(self) -> None:
        if self.n_cps < 1:
            raise ConfigurationError("n_cps must be at least 1")
        if self.days < 1:
            raise ConfigurationError("days must be at least 1")
        weights = [c.weight for c in self.components]
        if not weights or any(w <= 0 for w in weights):
            raise ConfigurationError("arrival components need positive weights")
        if len(self.max_power_choices_kw) != len(self.max_power_weights):
            raise ConfigurationError("one weight per max-power choice is required")
        object.__setattr__(self, "start", as_utc(self.start))


def reference_fleet_params(seed: int = 1) -> SyntheticFleetParams:
    """The documented reference fleet: 256 CPs, one year, ~45k sessions."""
    return dataclasses.replace(SyntheticFleetParams(), seed=seed)


def _round_minutes(hours: float) -> float:
    return round(hours * 60.0) / 60.0


def generate_synthetic_fleet(params: SyntheticFleetParams) -> list[ChargingSession]:
    """Draw a deterministic fleet of sessions from ``params``.

    The same params always produce the same sessions.  Timestamps are
    rounded to whole minutes; every session satisfies
    ``energy_kwh <= max_power_kw * duration_hours``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(params.seed), 0x5E55)))
    comp_weights = np.array([c.weight for c in params.components], dtype=float)
    comp_weights /= comp_weights.sum()
    hour_mean = np.array([c.hour_mean for c in params.components])
    hour_std = np.array([c.hour_std for c in params.components])
    dur_mean = np.array([c.duration_mean_h for c in params.components])
    dur_std = np.array([c.duration_std_h for c in params.components])
    power_choices = np.asarray(params.max_power_choices_kw, dtype=float)
    power_weights = np.asarray(params.max_power_weights, dtype=float)
    power_weights = power_weights / power_weights.sum()

    sessions: list[ChargingSession] = []
    horizon_h = params.days * 24.0
    for cp_index in range(params.n_cps):
        cp_id = f"cp{cp_index:04d}"
        n = int(rng.poisson(params.mean_sessions_per_cp))
        if n == 0:
            continue
        comp = rng.choice(len(params.components), size=n, p=comp_weights)
        day = rng.integers(0, params.days, size=n)
        hour = rng.normal(hour_mean[comp], hour_std[comp]) % 24.0
        arrival_h = day * 24.0 + hour
        duration = np.clip(
            rng.normal(dur_mean[comp], dur_std[comp]),
            params.min_duration_h,
            params.max_duration_h,
        )
        energy = np.clip(
            rng.lognormal(np.log(params.energy_median_kwh), params.energy_sigma, size=n),
            params.energy_min_kwh,
            params.energy_max_kwh,
        )
        p_max = rng.choice(power_choices, size=n, p=power_weights)

        order = np.argsort(arrival_h, kind="stable")
        prev_end = -np.inf
        kept = 0
        for i in order:
            arr = _round_minutes(float(arrival_h[i]))
            dep = _round_minutes(float(arrival_h[i] + duration[i]))
            if arr < prev_end + params.min_gap_h or arr >= horizon_h:
                continue
            if dep <= arr:
                continue
            dur_h = dep - arr
            e = min(float(energy[i]), float(p_max[i]) * dur_h)
            if e <= 0:
                continue
            sessions.append(
                ChargingSession(
                    session_id=f"{cp_id}-s{kept:04d}",
                    cp_id=cp_id,
                    arrival=params.start + timedelta(hours=arr),
                    departure=params.start + timedelta(hours=dep),
                    max_power_kw=float(p_max[i]),
                    energy_kwh=e,
                )
            )
            prev_end = dep
            kept += 1
    return sessions
