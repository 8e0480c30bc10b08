"""Charging session CSV ingestion with row-level rejection reporting."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from ..core import ChargingSession, ConfigurationError
from .timefmt import format_utc, parse_utc

__all__ = [
    "SESSION_COLUMNS",
    "RejectedRow",
    "SessionLoadResult",
    "load_sessions",
    "write_sessions",
]

SESSION_COLUMNS = (
    "session_id",
    "cp_id",
    "arrival_utc",
    "departure_utc",
    "max_power_kw",
    "energy_kwh",
)


@dataclass(frozen=True)
class RejectedRow:
    """One row the loader refused, with a machine-readable reason code."""

    line_no: int
    reason: str
    detail: str


@dataclass(frozen=True)
class SessionLoadResult:
    """Accepted sessions plus everything that was filtered out.

    ``clip_flagged`` lists ids whose requested energy exceeds what their
    own connection window can deliver; they are accepted and clipped later,
    when placed on a grid.
    """

    sessions: list[ChargingSession]
    rejects: list[RejectedRow]
    clip_flagged: tuple[str, ...]


def load_sessions(path: str | Path) -> SessionLoadResult:
    """Read sessions from CSV.

    Malformed rows never abort the load; each lands in the rejects list
    with its line number and a reason code (``missing_value``,
    ``bad_timestamp``, ``bad_number``, ``nonpositive_duration``,
    ``nonpositive_power``, ``nonpositive_energy``, ``duplicate_session_id``).
    A missing header column is a file-level error.
    """
    path = Path(path)
    sessions: list[ChargingSession] = []
    rejects: list[RejectedRow] = []
    flagged: list[str] = []
    seen_ids: set[str] = set()

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in SESSION_COLUMNS if c not in header]
        if missing:
            raise ConfigurationError(
                f"{path}: missing required columns {missing}; found {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            reject = _check_row(row, seen_ids)
            if reject is not None:
                rejects.append(RejectedRow(line_no, *reject))
                continue
            session = ChargingSession(
                session_id=row["session_id"].strip(),
                cp_id=row["cp_id"].strip(),
                arrival=parse_utc(row["arrival_utc"]),
                departure=parse_utc(row["departure_utc"]),
                max_power_kw=float(row["max_power_kw"]),
                energy_kwh=float(row["energy_kwh"]),
            )
            seen_ids.add(session.session_id)
            sessions.append(session)
            if session.energy_kwh > session.max_power_kw * session.duration_hours + 1e-9:
                flagged.append(session.session_id)

    return SessionLoadResult(sessions=sessions, rejects=rejects, clip_flagged=tuple(flagged))


def _check_row(row: dict, seen_ids: set[str]) -> tuple[str, str] | None:
    for col in SESSION_COLUMNS:
        value = row.get(col)
        if value is None or not value.strip():
            return "missing_value", f"column {col} is empty"
    try:
        arrival = parse_utc(row["arrival_utc"])
        departure = parse_utc(row["departure_utc"])
    except ValueError as exc:
        return "bad_timestamp", str(exc)
    try:
        power = float(row["max_power_kw"])
        energy = float(row["energy_kwh"])
    except ValueError as exc:
        return "bad_number", str(exc)
    if departure <= arrival:
        return "nonpositive_duration", (
            f"departure {row['departure_utc']} not after arrival {row['arrival_utc']}"
        )
    if not power > 0:
        return "nonpositive_power", f"max_power_kw={power}"
    if not energy > 0:
        return "nonpositive_energy", f"energy_kwh={energy}"
    if row["session_id"].strip() in seen_ids:
        return "duplicate_session_id", row["session_id"].strip()
    return None


def write_sessions(sessions, path: str | Path) -> None:
    """Write sessions to CSV in the canonical column order."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SESSION_COLUMNS)
        for s in sessions:
            writer.writerow(
                [
                    s.session_id,
                    s.cp_id,
                    format_utc(s.arrival),
                    format_utc(s.departure),
                    repr(float(s.max_power_kw)),
                    repr(float(s.energy_kwh)),
                ]
            )
