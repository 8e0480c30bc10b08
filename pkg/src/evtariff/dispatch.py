"""Per-session charging dispatch under four pricing regimes.

Every regime reduces to filling (step, segment) cells in a fixed cost order
until the session's energy is delivered.  The objectives are linear and the
cells have independent capacity bounds coupled only by the total-energy
constraint, so the sorted greedy fill is an exact optimum; no LP solver is
involved.  A lattice dynamic-programming oracle is provided for
cross-checking on small instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    ChargingSession,
    ClipReport,
    PowerProfile,
    PriceSeries,
    SegmentedTariff,
    SessionWindow,
    TimeGrid,
    ValidationError,
    ConfigurationError,
    segmented_step_cost,
    validate_session,
)

__all__ = [
    "StrategyKind",
    "DispatchStrategy",
    "CostBreakdown",
    "dispatch",
    "dispatch_session",
    "dispatch_unoptimized",
    "dispatch_dynamic",
    "dispatch_segmented_flat",
    "dispatch_segmented_dynamic",
    "evaluate_cost",
    "oracle_dispatch",
]


class StrategyKind(str, enum.Enum):
    """The four dispatch regimes."""

    UNOPTIMIZED = "unoptimized"
    DYNAMIC_ENERGY = "dynamic_energy"
    SEGMENTED_FLAT = "segmented_flat"
    SEGMENTED_DYNAMIC = "segmented_dynamic"


@dataclass(frozen=True)
class DispatchStrategy:
    """A dispatch regime plus the price inputs it needs.

    ``tariff`` is required for the segmented kinds, ``prices`` for the
    dynamic kinds; unused inputs must be None.
    """

    kind: StrategyKind
    tariff: SegmentedTariff | None = None
    prices: PriceSeries | None = None

    def __post_init__(self) -> None:
        needs_tariff = self.kind in (StrategyKind.SEGMENTED_FLAT, StrategyKind.SEGMENTED_DYNAMIC)
        needs_prices = self.kind in (StrategyKind.DYNAMIC_ENERGY, StrategyKind.SEGMENTED_DYNAMIC)
        if needs_tariff and self.tariff is None:
            raise ConfigurationError(f"{self.kind.value} dispatch requires a tariff")
        if not needs_tariff and self.tariff is not None:
            raise ConfigurationError(f"{self.kind.value} dispatch takes no tariff")
        if needs_prices and self.prices is None:
            raise ConfigurationError(f"{self.kind.value} dispatch requires an energy price series")
        if not needs_prices and self.prices is not None:
            raise ConfigurationError(f"{self.kind.value} dispatch takes no energy prices")

    @classmethod
    def unoptimized(cls) -> "DispatchStrategy":
        return cls(StrategyKind.UNOPTIMIZED)

    @classmethod
    def dynamic(cls, prices: PriceSeries) -> "DispatchStrategy":
        return cls(StrategyKind.DYNAMIC_ENERGY, prices=prices)

    @classmethod
    def segmented_flat(cls, tariff: SegmentedTariff) -> "DispatchStrategy":
        return cls(StrategyKind.SEGMENTED_FLAT, tariff=tariff)

    @classmethod
    def segmented_dynamic(cls, tariff: SegmentedTariff, prices: PriceSeries) -> "DispatchStrategy":
        return cls(StrategyKind.SEGMENTED_DYNAMIC, tariff=tariff, prices=prices)

    @property
    def power_cap_kw(self) -> float | None:
        """Connection capacity implied by the tariff, if any."""
        return self.tariff.total_capacity_kw if self.tariff is not None else None


@dataclass(frozen=True)
class CostBreakdown:
    """Session charging cost split into energy and network components."""

    energy_cost_eur: float
    network_cost_eur: float

    @property
    def total_eur(self) -> float:
        return self.energy_cost_eur + self.network_cost_eur


def _fill_in_order(caps_kwh: np.ndarray, order: np.ndarray, target_kwh: float) -> np.ndarray:
    """Fill flattened cells to capacity following ``order`` until ``target_kwh``.

    The last touched cell gets a partial fill so the total matches exactly.
    """
    alloc = np.zeros_like(caps_kwh)
    if target_kwh <= 0.0:
        return alloc
    cum = np.cumsum(caps_kwh[order])
    total = float(cum[-1]) if len(cum) else 0.0
    if target_kwh > total + 1e-9:
        raise ValidationError(
            f"energy {target_kwh} kWh exceeds window capacity {total} kWh"
        )
    k = int(np.searchsorted(cum, target_kwh - 1e-12, side="left"))
    k = min(k, len(order) - 1)
    full = order[:k]
    alloc[full] = caps_kwh[full]
    prev = float(cum[k - 1]) if k else 0.0
    alloc[order[k]] = target_kwh - prev
    return alloc


def _profile_from_alloc(
    window: SessionWindow, alloc_kwh: np.ndarray, seg_alloc_kwh: np.ndarray | None
) -> PowerProfile:
    dt = window.grid.step_hours
    seg_power = None if seg_alloc_kwh is None else seg_alloc_kwh / dt
    return PowerProfile(
        grid=window.grid,
        session_id=window.session.session_id,
        cp_id=window.session.cp_id,
        first_step=window.first_step,
        power_kw=alloc_kwh / dt,
        segment_power_kw=seg_power,
    )


def dispatch_unoptimized(window: SessionWindow) -> PowerProfile:
    """Charge at maximum power from arrival until the energy is delivered."""
    caps = window.step_power_caps_kw * window.grid.step_hours
    order = np.arange(len(caps))
    alloc = _fill_in_order(caps, order, window.energy_kwh)
    return _profile_from_alloc(window, alloc, None)


def dispatch_dynamic(window: SessionWindow, prices: PriceSeries) -> PowerProfile:
    """Fill the cheapest hours first; ties go to the earlier step."""
    grid = window.grid
    step_prices = prices.step_values(grid, window.first_step, window.n_steps)
    caps = window.step_power_caps_kw * grid.step_hours
    order = np.argsort(step_prices, kind="stable")
    alloc = _fill_in_order(caps, order, window.energy_kwh)
    return _profile_from_alloc(window, alloc, None)


def _segment_cell_caps_kwh(window: SessionWindow, tariff: SegmentedTariff) -> np.ndarray:
    """Energy capacity of each (step, segment) cell, shape (steps, segments).

    Segments fill bottom-up within a step, so the session power cap turns
    into static per-segment caps; availability scales boundary steps.
    """
    seg_caps = tariff.effective_segment_caps_kw(window.max_power_kw)
    return np.outer(window.availability, seg_caps) * window.grid.step_hours


def dispatch_segmented_flat(window: SessionWindow, tariff: SegmentedTariff) -> PowerProfile:
    """Minimize segmented network cost; finish as early as cost allows.

    Cells are filled by (segment price asc, step asc, segment asc): among
    equally priced cells the earlier step wins, which makes the schedule the
    earliest-completing one within the cost-optimal set.
    """
    m, s = window.n_steps, tariff.n_segments
    caps = _segment_cell_caps_kwh(window, tariff).ravel()
    lam = np.tile(np.asarray(tariff.segment_prices_eur_per_kwh), m)
    t_idx = np.repeat(np.arange(m), s)
    s_idx = np.tile(np.arange(s), m)
    order = np.lexsort((s_idx, t_idx, lam))
    alloc = _fill_in_order(caps, order, window.energy_kwh).reshape(m, s)
    return _profile_from_alloc(window, alloc.sum(axis=1), alloc)


def dispatch_segmented_dynamic(
    window: SessionWindow, tariff: SegmentedTariff, prices: PriceSeries
) -> PowerProfile:
    """Minimize energy cost plus segmented network cost jointly.

    Each (step, segment) cell costs ``price[step] + segment_price`` per kWh;
    ties are broken by (segment asc, step asc).
    """
    m, s = window.n_steps, tariff.n_segments
    step_prices = prices.step_values(window.grid, window.first_step, m)
    caps = _segment_cell_caps_kwh(window, tariff).ravel()
    cost = (step_prices[:, None] + np.asarray(tariff.segment_prices_eur_per_kwh)[None, :]).ravel()
    t_idx = np.repeat(np.arange(m), s)
    s_idx = np.tile(np.arange(s), m)
    order = np.lexsort((t_idx, s_idx, cost))
    alloc = _fill_in_order(caps, order, window.energy_kwh).reshape(m, s)
    return _profile_from_alloc(window, alloc.sum(axis=1), alloc)


def dispatch(window: SessionWindow, strategy: DispatchStrategy) -> PowerProfile:
    """Dispatch ``window`` under ``strategy`` (dispatch table over kinds)."""
    if strategy.kind is StrategyKind.UNOPTIMIZED:
        return dispatch_unoptimized(window)
    if strategy.kind is StrategyKind.DYNAMIC_ENERGY:
        return dispatch_dynamic(window, strategy.prices)
    if strategy.kind is StrategyKind.SEGMENTED_FLAT:
        return dispatch_segmented_flat(window, strategy.tariff)
    if strategy.kind is StrategyKind.SEGMENTED_DYNAMIC:
        return dispatch_segmented_dynamic(window, strategy.tariff, strategy.prices)
    raise ConfigurationError(f"unknown strategy kind {strategy.kind!r}")


def dispatch_session(
    session: ChargingSession, strategy: DispatchStrategy, grid: TimeGrid
) -> tuple[PowerProfile, ClipReport]:
    """Validate ``session`` on ``grid`` (capped at the tariff capacity when
    one applies) and dispatch it.  Returns the profile and the clip report."""
    window, report = validate_session(session, grid, power_cap_kw=strategy.power_cap_kw)
    return dispatch(window, strategy), report


def evaluate_cost(profile: PowerProfile, strategy: DispatchStrategy) -> CostBreakdown:
    """Bill a power profile under a strategy's prices and tariff.

    The energy component is zero under flat pricing.  The network component
    uses the profile's segment decomposition when present; otherwise each
    step's power is split bottom-up, which is the cheapest feasible billing.
    """
    dt = profile.grid.step_hours
    energy_cost = 0.0
    if strategy.prices is not None:
        step_prices = strategy.prices.step_values(
            profile.grid, profile.first_step, len(profile.power_kw)
        )
        energy_cost = float(np.dot(step_prices, profile.power_kw)) * dt

    network_cost = 0.0
    if strategy.tariff is not None:
        if profile.segment_power_kw is not None:
            lam = np.asarray(strategy.tariff.segment_prices_eur_per_kwh)
            network_cost = float(profile.segment_power_kw.sum(axis=0) @ lam) * dt
        else:
            network_cost = sum(
                segmented_step_cost(float(p), strategy.tariff, dt)[0]
                for p in profile.power_kw
            )
    return CostBreakdown(energy_cost_eur=energy_cost, network_cost_eur=network_cost)


# ---------------------------------------------------------------------------
# Lattice DP oracle
# ---------------------------------------------------------------------------

_ORACLE_STATE_LIMIT = 10_000_000


def oracle_dispatch(
    window: SessionWindow, strategy: DispatchStrategy, lattice_kw: float
) -> PowerProfile:
    """Exact optimum over power profiles quantized to ``lattice_kw``.

    Dynamic programming over (step, delivered-energy) states; intended for
    small test instances.  The window's energy must be representable on the
    lattice, every step must be fully available, and the state space is
    capped at ten million entries.  For the unoptimized kind the DP
    maximizes cumulative delivered energy instead of minimizing cost.
    """
    if lattice_kw <= 0:
        raise ConfigurationError(f"lattice_kw must be positive, got {lattice_kw}")
    if np.any(window.availability < 1.0):
        raise ConfigurationError("oracle requires fully available steps")
    grid = window.grid
    dt = grid.step_hours
    unit_kwh = lattice_kw * dt
    k_float = window.energy_kwh / unit_kwh
    k_total = round(k_float)
    if abs(k_float - k_total) > 1e-6 or k_total < 0:
        raise ConfigurationError(
            f"energy {window.energy_kwh} kWh is not on the {lattice_kw} kW lattice"
        )

    cap_kw = window.max_power_kw
    if strategy.tariff is not None:
        cap_kw = min(cap_kw, strategy.tariff.total_capacity_kw)
    c_max = int(np.floor(cap_kw / lattice_kw + 1e-9))
    m = window.n_steps
    if m * (k_total + 1) * (c_max + 1) > _ORACLE_STATE_LIMIT:
        raise ConfigurationError("instance too large for the oracle")
    if k_total > m * c_max:
        raise ValidationError("energy does not fit the quantized window")

    step_prices = np.zeros(m)
    if strategy.prices is not None:
        step_prices = strategy.prices.step_values(grid, window.first_step, m)

    # Per-choice cost of running c lattice units for one step (network part).
    seg_cost = np.zeros(c_max + 1)
    if strategy.tariff is not None:
        for c in range(c_max + 1):
            seg_cost[c], _ = segmented_step_cost(c * lattice_kw, strategy.tariff, dt)

    maximize_energy = strategy.kind is StrategyKind.UNOPTIMIZED
    inf = np.inf
    value = np.full(k_total + 1, inf)
    value[0] = 0.0
    choices = np.zeros((m, k_total + 1), dtype=np.int32)
    units = np.arange(k_total + 1)

    for t in range(m):
        new_value = np.full(k_total + 1, inf)
        new_choice = np.zeros(k_total + 1, dtype=np.int32)
        for c in range(min(c_max, k_total) + 1):
            if maximize_energy:
                # Reward energy on board after this step (higher is better,
                # so subtract it from the running objective).
                step_cost = -(units[c:] * unit_kwh)
            else:
                step_cost = step_prices[t] * c * unit_kwh + seg_cost[c]
            cand = value[: k_total + 1 - c] + step_cost
            better = cand < new_value[c:] - 1e-15
            new_value[c:][better] = cand[better]
            new_choice[c:][better] = c
        value = new_value
        choices[t] = new_choice

    if not np.isfinite(value[k_total]):
        raise ValidationError("no feasible quantized schedule")

    power = np.zeros(m)
    j = k_total
    for t in range(m - 1, -1, -1):
        c = int(choices[t, j])
        power[t] = c * lattice_kw
        j -= c

    seg_power = None
    if strategy.tariff is not None:
        seg_power = np.vstack(
            [segmented_step_cost(p, strategy.tariff, dt)[1] for p in power]
        )
    return PowerProfile(
        grid=grid,
        session_id=window.session.session_id,
        cp_id=window.session.cp_id,
        first_step=window.first_step,
        power_kw=power,
        segment_power_kw=seg_power,
    )
