"""Figure rendering produces valid PNG files."""

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from evtariff import (
    ChargingSession,
    DispatchStrategy,
    PriceSeries,
    SegmentedTariff,
    aggregate_profiles,
    dispatch_session,
    group_by_cp,
    peak_study,
    quantile_by_hour,
)
from evtariff.io import profile_table
from evtariff.plots import save_peak_study, save_quantile_profile, save_session_profile

UTC = timezone.utc
T0 = datetime(2022, 1, 1, tzinfo=UTC)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture
def fixtures(day_grid):
    tariff = SegmentedTariff((4.0, 8.0, 11.0), (0.0, 0.055, 0.9))
    prices = PriceSeries.hourly(T0, np.linspace(0.05, 0.4, 24))
    strategy = DispatchStrategy.segmented_dynamic(tariff, prices)
    sessions = [
        ChargingSession(
            session_id=f"s{i}",
            cp_id=f"cp{i}",
            arrival=T0 + timedelta(hours=2 * i),
            departure=T0 + timedelta(hours=2 * i + 6),
            max_power_kw=11.0,
            energy_kwh=20.0,
        )
        for i in range(4)
    ]
    return day_grid, strategy, sessions


def assert_png(path):
    data = path.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 1024


def test_session_profile_figure(fixtures, tmp_path):
    grid, strategy, sessions = fixtures
    profile, _ = dispatch_session(sessions[0], strategy, grid)
    table = profile_table(profile, strategy)
    out = save_session_profile(
        table, tmp_path / "profile.png", tariff=strategy.tariff, title="demo"
    )
    assert_png(out)


def test_quantile_profile_figure(fixtures, tmp_path):
    grid, strategy, sessions = fixtures
    profiles = [dispatch_session(s, strategy, grid)[0] for s in sessions]
    qp = quantile_by_hour(aggregate_profiles(profiles, grid))
    out = save_quantile_profile(qp, tmp_path / "quantile.png", title="demo")
    assert_png(out)


def test_peak_study_figure(fixtures, tmp_path):
    grid, strategy, sessions = fixtures
    result = peak_study(
        group_by_cp(sessions), strategy, grid, levels=(1, 2, 4), repeats=4, seed=1
    )
    out = save_peak_study(result, tmp_path / "peaks.png", title="demo")
    assert_png(out)
