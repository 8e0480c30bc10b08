"""Result serialization: CSV long formats with JSON mirrors, plus readers.

Floats are written with ``repr`` so a read back reproduces the exact value;
round-tripping any result type through either format is lossless.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from ..aggregate import PeakStudyResult, QuantileProfile
from ..core import ConfigurationError, PowerProfile, TimeGrid
from ..dispatch import DispatchStrategy, dispatch_session, evaluate_cost
from .timefmt import format_utc, parse_utc

__all__ = [
    "ProfileTable",
    "SessionCost",
    "CostTable",
    "profile_table",
    "session_cost_table",
    "write_results",
    "read_quantile_profile",
    "read_peak_study",
    "read_cost_table",
    "read_profile_table",
]


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """Flat, plottable view of one session's dispatch.

    One row per occupied grid step: wall-clock time, mean power, its split
    across tariff segments (if any), energy delivered so far, and the unit
    price the next marginal kWh would pay at that step.
    """

    session_id: str
    times_utc: tuple[datetime, ...]
    power_kw: np.ndarray
    segment_power_kw: np.ndarray | None
    cumulative_energy_kwh: np.ndarray
    marginal_price_eur_per_kwh: np.ndarray


@dataclass(frozen=True)
class SessionCost:
    """Billing outcome of one dispatched session."""

    session_id: str
    cp_id: str
    energy_kwh: float
    clipped: bool
    energy_cost_eur: float
    network_cost_eur: float
    total_eur: float


@dataclass(frozen=True)
class CostTable:
    """Per-session billing rows for one strategy."""

    rows: tuple[SessionCost, ...]


def profile_table(profile: PowerProfile, strategy: DispatchStrategy) -> ProfileTable:
    """Tabulate a dispatched profile with prices and cumulative energy."""
    grid = profile.grid
    n = len(profile.power_kw)
    times = tuple(grid.time_at(profile.first_step + k) for k in range(n))

    marginal = np.zeros(n)
    if strategy.prices is not None:
        marginal += strategy.prices.step_values(grid, profile.first_step, n)
    if strategy.tariff is not None:
        thresholds = np.asarray(strategy.tariff.cumulative_thresholds_kw)
        lam = np.asarray(strategy.tariff.segment_prices_eur_per_kwh)
        idx = np.searchsorted(thresholds, profile.power_kw + 1e-9, side="left")
        idx = np.minimum(idx, len(lam) - 1)
        marginal += lam[idx]

    return ProfileTable(
        session_id=profile.session_id,
        times_utc=times,
        power_kw=np.asarray(profile.power_kw),
        segment_power_kw=None if profile.segment_power_kw is None else np.asarray(profile.segment_power_kw),
        cumulative_energy_kwh=profile.cumulative_energy_kwh(),
        marginal_price_eur_per_kwh=marginal,
    )


def session_cost_table(sessions, strategy: DispatchStrategy, grid: TimeGrid) -> CostTable:
    """Dispatch and bill every session; rows keep the input order."""
    rows = []
    for session in sessions:
        profile, report = dispatch_session(session, strategy, grid)
        cost = evaluate_cost(profile, strategy)
        rows.append(
            SessionCost(
                session_id=session.session_id,
                cp_id=session.cp_id,
                energy_kwh=report.granted_kwh,
                clipped=report.clipped,
                energy_cost_eur=cost.energy_cost_eur,
                network_cost_eur=cost.network_cost_eur,
                total_eur=cost.total_eur,
            )
        )
    return CostTable(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def _f(x: float) -> str:
    return repr(float(x))


def write_results(result, path: str | Path, fmt: str = "csv") -> None:
    """Serialize a result object to ``path`` as CSV or JSON.

    Supported types: :class:`~evtariff.aggregate.QuantileProfile`,
    :class:`~evtariff.aggregate.PeakStudyResult`, :class:`CostTable`,
    :class:`ProfileTable`.
    """
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"unknown format {fmt!r}, expected csv or json")
    path = Path(path)
    if isinstance(result, QuantileProfile):
        _write_quantile(result, path, fmt)
    elif isinstance(result, PeakStudyResult):
        _write_peak_study(result, path, fmt)
    elif isinstance(result, CostTable):
        _write_cost_table(result, path, fmt)
    elif isinstance(result, ProfileTable):
        _write_profile_table(result, path, fmt)
    else:
        raise ConfigurationError(f"cannot serialize {type(result).__name__}")


def _dump_json(payload: dict, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_quantile(qp: QuantileProfile, path: Path, fmt: str) -> None:
    if fmt == "json":
        _dump_json(
            {
                "type": "quantile_profile",
                "n_cps": qp.n_cps,
                "quantile_levels": list(qp.quantile_levels),
                "values_kw_per_cp": [list(row) for row in qp.values_kw],
                "max_kw_per_cp": list(qp.max_kw),
            },
            path,
        )
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["hour", "statistic", "value_kw_per_cp"])
        writer.writerow(["", "n_cps", qp.n_cps])
        for hour in range(24):
            for j, q in enumerate(qp.quantile_levels):
                writer.writerow([hour, f"q{q:g}", _f(qp.values_kw[hour, j])])
            writer.writerow([hour, "max", _f(qp.max_kw[hour])])


def read_quantile_profile(path: str | Path) -> QuantileProfile:
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        return QuantileProfile(
            quantile_levels=tuple(payload["quantile_levels"]),
            values_kw=np.asarray(payload["values_kw_per_cp"]),
            max_kw=np.asarray(payload["max_kw_per_cp"]),
            n_cps=int(payload["n_cps"]),
        )
    levels: list[float] = []
    n_cps = 0
    values: dict[tuple[int, float], float] = {}
    max_kw = np.zeros(24)
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stat = row["statistic"]
            if stat == "n_cps":
                n_cps = int(row["value_kw_per_cp"])
                continue
            hour = int(row["hour"])
            if stat == "max":
                max_kw[hour] = float(row["value_kw_per_cp"])
            else:
                q = float(stat[1:])
                if q not in levels:
                    levels.append(q)
                values[(hour, q)] = float(row["value_kw_per_cp"])
    arr = np.array([[values[(h, q)] for q in levels] for h in range(24)])
    return QuantileProfile(
        quantile_levels=tuple(levels), values_kw=arr, max_kw=max_kw, n_cps=n_cps
    )


def _write_peak_study(result: PeakStudyResult, path: Path, fmt: str) -> None:
    summary = result.summary()
    if fmt == "json":
        _dump_json(
            {
                "type": "peak_study",
                "single_cp_kw": result.single_cp_kw,
                "levels": list(result.levels),
                "repeats": result.n_repeats,
                "summary_quantile_levels": list(result.summary_quantile_levels),
                "max_per_cp_kw": {
                    str(lvl): list(arr)
                    for lvl, arr in zip(result.levels, result.max_per_cp_kw)
                },
                "diversity_factor": {
                    str(lvl): list(result.diversity_factors(lvl)) for lvl in result.levels
                },
                "summary_max_per_cp_kw": {
                    str(lvl): {f"{q:g}": v for q, v in summary[lvl].items()}
                    for lvl in result.levels
                },
            },
            path,
        )
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["level", "repeat", "metric", "value"])
        writer.writerow(["", "", "single_cp_kw", _f(result.single_cp_kw)])
        for lvl, arr in zip(result.levels, result.max_per_cp_kw):
            div = result.diversity_factors(lvl)
            for r in range(len(arr)):
                writer.writerow([lvl, r, "max_per_cp_kw", _f(arr[r])])
            for r in range(len(arr)):
                writer.writerow([lvl, r, "diversity_factor", _f(div[r])])
            for q in result.summary_quantile_levels:
                writer.writerow([lvl, "", f"max_per_cp_kw_q{q:g}", _f(summary[lvl][q])])


def read_peak_study(path: str | Path) -> PeakStudyResult:
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        levels = [int(x) for x in payload["levels"]]
        return PeakStudyResult(
            levels=tuple(levels),
            max_per_cp_kw=tuple(
                np.asarray(payload["max_per_cp_kw"][str(lvl)]) for lvl in levels
            ),
            summary_quantile_levels=tuple(payload["summary_quantile_levels"]),
            single_cp_kw=float(payload["single_cp_kw"]),
        )
    single_cp = 23.0
    levels: list[int] = []
    raw: dict[int, dict[int, float]] = {}
    q_levels: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            metric = row["metric"]
            if metric == "single_cp_kw":
                single_cp = float(row["value"])
            elif metric == "max_per_cp_kw":
                lvl = int(row["level"])
                if lvl not in raw:
                    raw[lvl] = {}
                    levels.append(lvl)
                raw[lvl][int(row["repeat"])] = float(row["value"])
            elif metric.startswith("max_per_cp_kw_q"):
                q = float(metric.rsplit("_q", 1)[1])
                if q not in q_levels:
                    q_levels.append(q)
    arrays = tuple(
        np.array([raw[lvl][r] for r in sorted(raw[lvl])]) for lvl in levels
    )
    return PeakStudyResult(
        levels=tuple(levels),
        max_per_cp_kw=arrays,
        summary_quantile_levels=tuple(q_levels),
        single_cp_kw=single_cp,
    )


def _write_cost_table(table: CostTable, path: Path, fmt: str) -> None:
    if fmt == "json":
        _dump_json(
            {
                "type": "cost_table",
                "rows": [
                    {
                        "session_id": r.session_id,
                        "cp_id": r.cp_id,
                        "energy_kwh": r.energy_kwh,
                        "clipped": r.clipped,
                        "energy_cost_eur": r.energy_cost_eur,
                        "network_cost_eur": r.network_cost_eur,
                        "total_eur": r.total_eur,
                    }
                    for r in table.rows
                ],
            },
            path,
        )
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "session_id",
                "cp_id",
                "energy_kwh",
                "clipped",
                "energy_cost_eur",
                "network_cost_eur",
                "total_eur",
            ]
        )
        for r in table.rows:
            writer.writerow(
                [
                    r.session_id,
                    r.cp_id,
                    _f(r.energy_kwh),
                    "true" if r.clipped else "false",
                    _f(r.energy_cost_eur),
                    _f(r.network_cost_eur),
                    _f(r.total_eur),
                ]
            )


def read_cost_table(path: str | Path) -> CostTable:
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        return CostTable(
            rows=tuple(
                SessionCost(
                    session_id=r["session_id"],
                    cp_id=r["cp_id"],
                    energy_kwh=float(r["energy_kwh"]),
                    clipped=bool(r["clipped"]),
                    energy_cost_eur=float(r["energy_cost_eur"]),
                    network_cost_eur=float(r["network_cost_eur"]),
                    total_eur=float(r["total_eur"]),
                )
                for r in payload["rows"]
            )
        )
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                SessionCost(
                    session_id=row["session_id"],
                    cp_id=row["cp_id"],
                    energy_kwh=float(row["energy_kwh"]),
                    clipped=row["clipped"] == "true",
                    energy_cost_eur=float(row["energy_cost_eur"]),
                    network_cost_eur=float(row["network_cost_eur"]),
                    total_eur=float(row["total_eur"]),
                )
            )
    return CostTable(rows=tuple(rows))


def _write_profile_table(table: ProfileTable, path: Path, fmt: str) -> None:
    n_seg = 0 if table.segment_power_kw is None else table.segment_power_kw.shape[1]
    if fmt == "json":
        _dump_json(
            {
                "type": "profile_table",
                "session_id": table.session_id,
                "times_utc": [format_utc(t) for t in table.times_utc],
                "power_kw": list(table.power_kw),
                "segment_power_kw": None
                if table.segment_power_kw is None
                else [list(row) for row in table.segment_power_kw],
                "cumulative_energy_kwh": list(table.cumulative_energy_kwh),
                "marginal_price_eur_per_kwh": list(table.marginal_price_eur_per_kwh),
            },
            path,
        )
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        seg_cols = [f"segment_{s}_kw" for s in range(n_seg)]
        writer.writerow(
            ["session_id", "time_utc", "power_kw", *seg_cols,
             "cumulative_energy_kwh", "marginal_price_eur_per_kwh"]
        )
        for i, t in enumerate(table.times_utc):
            seg = (
                [_f(table.segment_power_kw[i, s]) for s in range(n_seg)]
                if n_seg
                else []
            )
            writer.writerow(
                [
                    table.session_id,
                    format_utc(t),
                    _f(table.power_kw[i]),
                    *seg,
                    _f(table.cumulative_energy_kwh[i]),
                    _f(table.marginal_price_eur_per_kwh[i]),
                ]
            )


def read_profile_table(path: str | Path) -> ProfileTable:
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        seg = payload["segment_power_kw"]
        return ProfileTable(
            session_id=payload["session_id"],
            times_utc=tuple(parse_utc(t) for t in payload["times_utc"]),
            power_kw=np.asarray(payload["power_kw"]),
            segment_power_kw=None if seg is None else np.asarray(seg),
            cumulative_energy_kwh=np.asarray(payload["cumulative_energy_kwh"]),
            marginal_price_eur_per_kwh=np.asarray(payload["marginal_price_eur_per_kwh"]),
        )
    times: list[datetime] = []
    power: list[float] = []
    cumulative: list[float] = []
    marginal: list[float] = []
    seg_rows: list[list[float]] = []
    session_id = ""
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        seg_cols = [c for c in (reader.fieldnames or []) if c.startswith("segment_")]
        for row in reader:
            session_id = row["session_id"]
            times.append(parse_utc(row["time_utc"]))
            power.append(float(row["power_kw"]))
            cumulative.append(float(row["cumulative_energy_kwh"]))
            marginal.append(float(row["marginal_price_eur_per_kwh"]))
            if seg_cols:
                seg_rows.append([float(row[c]) for c in seg_cols])
    return ProfileTable(
        session_id=session_id,
        times_utc=tuple(times),
        power_kw=np.asarray(power),
        segment_power_kw=np.asarray(seg_rows) if seg_rows else None,
        cumulative_energy_kwh=np.asarray(cumulative),
        marginal_price_eur_per_kwh=np.asarray(marginal),
    )
