"""Fleet-level aggregation: load profiles, hour-of-day quantiles, peak study.

The peak study samples ever-larger fleets from a charge-point population,
dispatches every session of the sampled CPs and records the annual peak of
the combined load, normalized per CP.  The diversity factor ties that peak
back to the 23 kW connection capacity of a single CP.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .core import ChargingSession, PowerProfile, TimeGrid, ValidationError, ConfigurationError
from .dispatch import DispatchStrategy, dispatch_session

__all__ = [
    "SINGLE_CP_CAPACITY_KW",
    "AggregateProfile",
    "QuantileProfile",
    "PeakStudyResult",
    "aggregate_profiles",
    "diversity_factor",
    "quantile_by_hour",
    "sample_fleet",
    "peak_study",
    "group_by_cp",
    "cp_load_profiles",
]

SINGLE_CP_CAPACITY_KW = 23.0


@dataclass(frozen=True, eq=False)
class AggregateProfile:
    """Combined load of a set of charge points on a shared grid."""

    grid: TimeGrid
    n_cps: int
    power_kw: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.power_kw, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "power_kw", arr)
        if len(arr) != self.grid.n_steps:
            raise ValidationError(
                f"aggregate has {len(arr)} steps but grid has {self.grid.n_steps}"
            )
        if self.n_cps < 0:
            raise ValidationError("n_cps must be nonnegative")

    @property
    def peak_kw(self) -> float:
        return float(self.power_kw.max(initial=0.0))

    @property
    def max_per_cp_kw(self) -> float:
        if self.n_cps == 0:
            return 0.0
        return self.peak_kw / self.n_cps


def aggregate_profiles(profiles: Iterable[PowerProfile], grid: TimeGrid) -> AggregateProfile:
    """Sum session profiles into one load curve; counts distinct CPs."""
    total = np.zeros(grid.n_steps)
    cps: set[str] = set()
    for p in profiles:
        if p.grid != grid:
            raise ValidationError(
                f"profile for session {p.session_id} lives on a different grid"
            )
        p.add_into(total)
        cps.add(p.cp_id)
    return AggregateProfile(grid=grid, n_cps=len(cps), power_kw=total)


def diversity_factor(aggregate: AggregateProfile, single_cp_kw: float = SINGLE_CP_CAPACITY_KW) -> float:
    """Connection capacity divided by the observed per-CP peak.

    1.0 means some interval drives every CP at full capacity simultaneously;
    large values mean strong smoothing from non-coincident sessions.
    """
    if aggregate.n_cps < 1:
        raise ValidationError("diversity factor needs at least one charge point")
    per_cp = aggregate.max_per_cp_kw
    if per_cp <= 0.0:
        raise ValidationError("diversity factor is undefined for an all-zero profile")
    return single_cp_kw / per_cp


@dataclass(frozen=True, eq=False)
class QuantileProfile:
    """Hour-of-day distribution of per-CP load.

    ``values_kw[h, i]`` is the ``quantile_levels[i]`` quantile of the daily
    mean load during hour ``h``, per CP.  ``max_kw[h]`` is the maximum over
    the same per-day population.
    """

    quantile_levels: tuple[float, ...]
    values_kw: np.ndarray
    max_kw: np.ndarray
    n_cps: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values_kw, dtype=float)
        mx = np.asarray(self.max_kw, dtype=float)
        values.flags.writeable = False
        mx.flags.writeable = False
        object.__setattr__(self, "values_kw", values)
        object.__setattr__(self, "max_kw", mx)
        object.__setattr__(self, "quantile_levels", tuple(float(q) for q in self.quantile_levels))
        if values.shape != (24, len(self.quantile_levels)):
            raise ValidationError(
                f"values_kw must be 24 x {len(self.quantile_levels)}, got {values.shape}"
            )
        if mx.shape != (24,):
            raise ValidationError(f"max_kw must have 24 entries, got {mx.shape}")


def quantile_by_hour(
    aggregate: AggregateProfile,
    quantile_levels: Sequence[float] = (0.05, 0.25, 0.5, 0.75, 0.95),
) -> QuantileProfile:
    """Distribution of per-CP load by hour of day across the horizon's days.

    For each hour h the population is that hour's mean power on each day of
    the horizon.  Quantiles interpolate linearly between order statistics.
    The grid must start at midnight UTC, span whole days, and divide hours
    evenly.
    """
    grid = aggregate.grid
    levels = tuple(float(q) for q in quantile_levels)
    if any(not 0.0 <= q <= 1.0 for q in levels):
        raise ConfigurationError(f"quantile levels must lie in [0, 1], got {levels}")
    steps_per_hour = round(1.0 / grid.step_hours)
    if abs(steps_per_hour * grid.step_hours - 1.0) > 1e-9:
        raise ConfigurationError(
            f"step_hours={grid.step_hours} does not divide one hour evenly"
        )
    if grid.n_steps % (24 * steps_per_hour) != 0:
        raise ConfigurationError("grid horizon must span a whole number of days")
    if (grid.start.hour, grid.start.minute, grid.start.second, grid.start.microsecond) != (0, 0, 0, 0):
        raise ConfigurationError("grid must start at midnight UTC for hour-of-day statistics")

    n_days = grid.n_steps // (24 * steps_per_hour)
    per_hour = aggregate.power_kw.reshape(n_days, 24, steps_per_hour).mean(axis=2)
    scale = 1.0 / aggregate.n_cps if aggregate.n_cps > 0 else 1.0
    values = np.quantile(per_hour, levels, axis=0).T * scale
    max_kw = per_hour.max(axis=0) * scale
    return QuantileProfile(
        quantile_levels=levels,
        values_kw=values,
        max_kw=max_kw,
        n_cps=aggregate.n_cps,
    )


def sample_fleet(cp_ids: Sequence[str], n: int, seed) -> list[str]:
    """Draw ``n`` distinct CP ids, uniformly without replacement.

    Ids are sorted before sampling and a partial Fisher-Yates shuffle is
    applied, so the draw depends only on the id set, ``n`` and ``seed``
    (an int or anything ``numpy.random.default_rng`` accepts).
    """
    pool = sorted(cp_ids)
    if len(set(pool)) != len(pool):
        raise ValidationError("cp_ids must be unique")
    if not 0 <= n <= len(pool):
        raise ValidationError(f"cannot sample {n} from {len(pool)} charge points")
    rng = np.random.default_rng(seed)
    for i in range(n):
        j = i + int(rng.integers(len(pool) - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:n]


@dataclass(frozen=True, eq=False)
class PeakStudyResult:
    """Per-CP annual peaks across fleet sizes and random fleet draws.

    ``max_per_cp_kw[i]`` holds one value per repeat for ``levels[i]``.
    Diversity factors are derived, never stored, so the identity
    ``d == single_cp_kw / max_per_cp`` holds exactly by construction.
    """

    levels: tuple[int, ...]
    max_per_cp_kw: tuple[np.ndarray, ...]
    summary_quantile_levels: tuple[float, ...] = (0.05, 0.25, 0.5, 0.75, 0.95)
    single_cp_kw: float = SINGLE_CP_CAPACITY_KW

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(int(n) for n in self.levels))
        arrays = tuple(np.asarray(a, dtype=float) for a in self.max_per_cp_kw)
        for a in arrays:
            a.flags.writeable = False
        object.__setattr__(self, "max_per_cp_kw", arrays)
        object.__setattr__(
            self, "summary_quantile_levels",
            tuple(float(q) for q in self.summary_quantile_levels),
        )
        if len(self.levels) != len(arrays):
            raise ValidationError("one result array per level is required")
        if len({len(a) for a in arrays}) > 1:
            raise ValidationError("all levels must have the same repeat count")

    @property
    def n_repeats(self) -> int:
        return len(self.max_per_cp_kw[0]) if self.max_per_cp_kw else 0

    def diversity_factors(self, level: int) -> np.ndarray:
        """23 kW over the per-CP peak, one value per repeat."""
        return self.single_cp_kw / self.max_per_cp_kw[self.levels.index(level)]

    def summary(self) -> dict[int, dict[float, float]]:
        """Per level: quantiles of max_per_cp_kw over the repeats."""
        out: dict[int, dict[float, float]] = {}
        for lvl, arr in zip(self.levels, self.max_per_cp_kw):
            qs = np.quantile(arr, self.summary_quantile_levels)
            out[lvl] = {q: float(v) for q, v in zip(self.summary_quantile_levels, qs)}
        return out

    def median_max_per_cp(self, level: int) -> float:
        return float(np.median(self.max_per_cp_kw[self.levels.index(level)]))


def group_by_cp(sessions: Iterable[ChargingSession]) -> dict[str, list[ChargingSession]]:
    """Bucket sessions by charge point id, keys sorted."""
    buckets: dict[str, list[ChargingSession]] = {}
    for s in sessions:
        buckets.setdefault(s.cp_id, []).append(s)
    return {cp: buckets[cp] for cp in sorted(buckets)}


def cp_load_profiles(
    sessions_by_cp: Mapping[str, Sequence[ChargingSession]],
    strategy: DispatchStrategy,
    grid: TimeGrid,
) -> dict[str, np.ndarray]:
    """Dispatch every session and sum per CP into dense load arrays.

    Sessions without horizon overlap are skipped; energy clipping is applied
    silently (use :func:`evtariff.dispatch.dispatch_session` directly when
    the clip reports matter).
    """
    out: dict[str, np.ndarray] = {}
    for cp_id in sorted(sessions_by_cp):
        load = np.zeros(grid.n_steps)
        for session in sessions_by_cp[cp_id]:
            try:
                profile, _ = dispatch_session(session, strategy, grid)
            except ValidationError:
                continue
            profile.add_into(load)
        out[cp_id] = load
    return out


def _child_seed(master_seed: int, level: int, repeat: int) -> np.random.SeedSequence:
    # Stable spawn: adding levels or repeats never changes existing draws.
    return np.random.SeedSequence(entropy=(int(master_seed), int(level), int(repeat)))


def peak_study(
    sessions_by_cp: Mapping[str, Sequence[ChargingSession]],
    strategy: DispatchStrategy,
    grid: TimeGrid,
    levels: Sequence[int],
    repeats: int,
    seed: int,
    summary_quantile_levels: Sequence[float] = (0.05, 0.25, 0.5, 0.75, 0.95),
) -> PeakStudyResult:
    """Annual per-CP peak vs. fleet size, over random fleet draws.

    For every fleet size in ``levels`` and every repeat, a fleet is sampled
    without replacement (seeded by ``(seed, level, repeat)``, so results are
    reproducible and independent of evaluation order), its sessions are
    dispatched under ``strategy`` and the aggregate annual peak per CP is
    recorded.  Calling this with the same seed for different strategies
    pairs the fleets across strategies.
    """
    population = sorted(sessions_by_cp)
    levels = [int(n) for n in levels]
    if not levels:
        raise ConfigurationError("at least one fleet size is required")
    if any(n < 1 for n in levels):
        raise ConfigurationError(f"fleet sizes must be positive, got {levels}")
    if max(levels) > len(population):
        raise ConfigurationError(
            f"fleet size {max(levels)} exceeds the {len(population)} available charge points"
        )
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1")

    loads = cp_load_profiles(sessions_by_cp, strategy, grid)
    results = []
    for level in levels:
        per_repeat = np.zeros(repeats)
        for r in range(repeats):
            fleet = sample_fleet(population, level, _child_seed(seed, level, r))
            total = np.zeros(grid.n_steps)
            for cp_id in fleet:
                total += loads[cp_id]
            per_repeat[r] = total.max(initial=0.0) / level
        results.append(per_repeat)

    return PeakStudyResult(
        levels=tuple(levels),
        max_per_cp_kw=tuple(results),
        summary_quantile_levels=tuple(float(q) for q in summary_quantile_levels),
    )
