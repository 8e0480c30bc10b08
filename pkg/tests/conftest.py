"""Shared fixtures and the acceptance-criteria summary hook."""

from datetime import datetime, timezone

import pytest

from evtariff import SegmentedTariff, make_time_grid

_criterion_lines: list[tuple[str, str]] = []


def record_criterion(key: str, line: str) -> None:
    """Collect one pass/fail line per acceptance criterion.

    The lines are printed as a dedicated section at the end of the pytest
    run, so they survive output capture.
    """
    _criterion_lines.append((key, line))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_criterion_lines):
        terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record a pass/fail line for one criterion, then assert it."""

    def check(key: str, description: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        suffix = f" [{detail}]" if detail else ""
        record_criterion(key, f"{key}: {status} - {description}{suffix}")
        assert passed, f"{key} failed: {description}{suffix}"

    return check


@pytest.fixture
def day_grid():
    return make_time_grid(
        datetime(2022, 1, 1, tzinfo=timezone.utc),
        datetime(2022, 1, 2, tzinfo=timezone.utc),
        0.25,
    )


@pytest.fixture
def two_day_grid():
    return make_time_grid(
        datetime(2022, 1, 1, tzinfo=timezone.utc),
        datetime(2022, 1, 3, tzinfo=timezone.utc),
        0.25,
    )


@pytest.fixture(scope="session")
def year_grid():
    return make_time_grid(
        datetime(2022, 1, 1, tzinfo=timezone.utc),
        datetime(2023, 1, 1, tzinfo=timezone.utc),
        0.25,
    )


@pytest.fixture
def wide_tariff():
    """Segments 4/8/11 kW: free base band, mid band, steep top band."""
    return SegmentedTariff((4.0, 8.0, 11.0), (0.0, 0.055, 0.9))


@pytest.fixture
def narrow_tariff():
    """Segments 2/4/17 kW with the same price ladder."""
    return SegmentedTariff((2.0, 4.0, 17.0), (0.0, 0.055, 0.9))
