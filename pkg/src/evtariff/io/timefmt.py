"""UTC timestamp parsing and formatting for CSV interchange."""

from __future__ import annotations

from datetime import datetime, timezone

__all__ = ["parse_utc", "format_utc"]


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC.

    Accepts a trailing ``Z`` (not understood by ``fromisoformat`` before
    Python 3.11).  Raises ``ValueError`` on malformed input.
    """
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_utc(dt: datetime) -> str:
    """Render a datetime as ``YYYY-MM-DDTHH:MM:SSZ`` (UTC, second precision)."""
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.replace(tzinfo=None).isoformat() + "Z"
    return dt.replace(tzinfo=None).isoformat(timespec="seconds") + "Z"
