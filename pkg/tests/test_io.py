"""File formats, synthetic data generators, scenario configuration."""

import dataclasses
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from evtariff import (
    ChargingSession,
    ConfigurationError,
    DispatchStrategy,
    PriceSeries,
    SegmentedTariff,
    StrategyKind,
    dispatch_session,
    make_time_grid,
    peak_study,
    group_by_cp,
    quantile_by_hour,
    aggregate_profiles,
)
from evtariff.io import (
    SESSION_COLUMNS,
    SyntheticFleetParams,
    generate_synthetic_fleet,
    list_presets,
    load_preset,
    load_prices,
    load_scenario,
    load_sessions,
    make_synthetic_prices,
    parse_scenario,
    profile_table,
    read_cost_table,
    read_peak_study,
    read_profile_table,
    read_quantile_profile,
    reference_fleet_params,
    session_cost_table,
    write_prices,
    write_results,
    write_sessions,
)
from evtariff.io.timefmt import format_utc, parse_utc

UTC = timezone.utc
T0 = datetime(2022, 1, 1, tzinfo=UTC)


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------


class TestTimeFormat:
    def test_z_suffix_roundtrip(self):
        t = parse_utc("2022-03-05T14:30:00Z")
        assert t == datetime(2022, 3, 5, 14, 30, tzinfo=UTC)
        assert format_utc(t) == "2022-03-05T14:30:00Z"

    def test_offset_and_naive_forms(self):
        assert parse_utc("2022-01-01T01:00:00+01:00") == T0
        assert parse_utc("2022-01-01T00:00:00") == T0

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_utc("not a time")


# ---------------------------------------------------------------------------
# Session CSV
# ---------------------------------------------------------------------------


def write_rows(path, rows, header=",".join(SESSION_COLUMNS)):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


class TestSessionCsv:
    def test_roundtrip_preserves_floats(self, tmp_path):
        sessions = [
            ChargingSession(
                session_id=f"s{i}",
                cp_id="cp1",
                arrival=T0 + timedelta(minutes=90 * i),
                departure=T0 + timedelta(minutes=90 * i + 61),
                max_power_kw=7.4,
                energy_kwh=float(np.random.default_rng(i).uniform(1, 50)),
            )
            for i in range(5)
        ]
        path = tmp_path / "sessions.csv"
        write_sessions(sessions, path)
        loaded = load_sessions(path)
        assert not loaded.rejects
        assert loaded.sessions == sessions

    def test_reject_reasons(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_rows(
            path,
            [
                "ok,cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,11,10",
                ",cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,11,10",
                "bad-ts,cp1,yesterday,2022-01-01T02:00:00Z,11,10",
                "bad-num,cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,eleven,10",
                "swapped,cp1,2022-01-01T03:00:00Z,2022-01-01T02:00:00Z,11,10",
                "no-power,cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,0,10",
                "no-energy,cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,11,-2",
                "ok,cp1,2022-01-01T05:00:00Z,2022-01-01T07:00:00Z,11,10",
            ],
        )
        result = load_sessions(path)
        assert [s.session_id for s in result.sessions] == ["ok"]
        reasons = [r.reason for r in result.rejects]
        assert reasons == [
            "missing_value",
            "bad_timestamp",
            "bad_number",
            "nonpositive_duration",
            "nonpositive_power",
            "nonpositive_energy",
            "duplicate_session_id",
        ]
        assert [r.line_no for r in result.rejects] == [3, 4, 5, 6, 7, 8, 9]

    def test_clip_flagging(self, tmp_path):
        path = tmp_path / "clip.csv"
        write_rows(
            path,
            [
                # 2 h at 11 kW holds 22 kWh; 30 kWh cannot fit.
                "greedy,cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,11,30",
                "fits,cp1,2022-01-01T00:00:00Z,2022-01-01T02:00:00Z,11,20",
            ],
        )
        result = load_sessions(path)
        assert result.clip_flagged == ("greedy",)
        assert len(result.sessions) == 2

    def test_missing_column_is_fatal(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("session_id,cp_id\nonly,two\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_sessions(path)


# ---------------------------------------------------------------------------
# Price CSV
# ---------------------------------------------------------------------------


def price_csv(path, rows, column="price_eur_per_kwh"):
    path.write_text(
        f"hour_start_utc,{column}\n" + "\n".join(rows) + "\n", encoding="utf-8"
    )


class TestPriceCsv:
    def test_roundtrip(self, tmp_path, day_grid):
        series = PriceSeries.hourly(T0, np.linspace(0.05, 0.5, 24))
        path = tmp_path / "prices.csv"
        write_prices(series, path)
        loaded = load_prices(path, day_grid)
        assert np.array_equal(loaded.prices_eur_per_kwh, series.prices_eur_per_kwh)

    def test_mwh_column_is_converted(self, tmp_path, day_grid):
        rows = [
            f"{format_utc(T0 + timedelta(hours=h))},{50.0 + h}" for h in range(24)
        ]
        path = tmp_path / "mwh.csv"
        price_csv(path, rows, column="price_eur_per_mwh")
        loaded = load_prices(path, day_grid)
        assert loaded.prices_eur_per_kwh[0] == pytest.approx(0.05)
        assert loaded.prices_eur_per_kwh[23] == pytest.approx(0.073)

    def test_gap_is_an_error(self, tmp_path, day_grid):
        rows = [
            f"{format_utc(T0 + timedelta(hours=h))},0.1"
            for h in range(24)
            if h != 7
        ]
        path = tmp_path / "gap.csv"
        price_csv(path, rows)
        with pytest.raises(ConfigurationError, match="07:00"):
            load_prices(path, day_grid)

    def test_duplicate_hour_is_an_error(self, tmp_path, day_grid):
        rows = [f"{format_utc(T0 + timedelta(hours=h))},0.1" for h in range(24)]
        rows.append(rows[3])
        path = tmp_path / "dup.csv"
        price_csv(path, rows)
        with pytest.raises(ConfigurationError):
            load_prices(path, day_grid)

    def test_partial_coverage_is_an_error(self, tmp_path, day_grid):
        rows = [f"{format_utc(T0 + timedelta(hours=h))},0.1" for h in range(12)]
        path = tmp_path / "half.csv"
        price_csv(path, rows)
        with pytest.raises(ConfigurationError):
            load_prices(path, day_grid)

    def test_misaligned_hour_is_an_error(self, tmp_path, day_grid):
        rows = ["2022-01-01T00:30:00Z,0.1"]
        path = tmp_path / "offset.csv"
        price_csv(path, rows)
        with pytest.raises(ConfigurationError):
            load_prices(path, day_grid)

    def test_exactly_one_price_column(self, tmp_path, day_grid):
        path = tmp_path / "both.csv"
        path.write_text(
            "hour_start_utc,price_eur_per_kwh,price_eur_per_mwh\n"
            "2022-01-01T00:00:00Z,0.1,100\n",
            encoding="utf-8",
        )
        with pytest.raises(ConfigurationError):
            load_prices(path, day_grid)


class TestSyntheticPrices:
    def test_deterministic_and_positive(self):
        a = make_synthetic_prices(T0, days=30, seed=11)
        b = make_synthetic_prices(T0, days=30, seed=11)
        c = make_synthetic_prices(T0, days=30, seed=12)
        assert np.array_equal(a.prices_eur_per_kwh, b.prices_eur_per_kwh)
        assert not np.array_equal(a.prices_eur_per_kwh, c.prices_eur_per_kwh)
        assert a.n_hours == 30 * 24
        assert np.all(a.prices_eur_per_kwh >= 0.005)

    def test_daily_shape(self):
        series = make_synthetic_prices(T0, days=90, seed=11)
        by_hour = series.prices_eur_per_kwh.reshape(90, 24).mean(axis=0)
        night = by_hour[3:5].mean()
        evening = by_hour[18:21].mean()
        morning = by_hour[7:10].mean()
        assert evening > night
        assert morning > night


# ---------------------------------------------------------------------------
# Synthetic fleet
# ---------------------------------------------------------------------------


class TestSyntheticFleet:
    def test_reference_fleet_size_and_determinism(self):
        params = reference_fleet_params()
        fleet = generate_synthetic_fleet(params)
        again = generate_synthetic_fleet(params)
        assert fleet == again
        assert 43_000 <= len(fleet) <= 47_000
        assert len({s.cp_id for s in fleet}) == 256

    def test_sessions_are_valid_and_disjoint(self):
        params = SyntheticFleetParams(n_cps=6, days=60, seed=5)
        fleet = generate_synthetic_fleet(params)
        assert len({s.session_id for s in fleet}) == len(fleet)
        horizon_end = params.start + timedelta(days=60)
        by_cp = {}
        for s in fleet:
            # Arrivals stay inside the horizon; the last stay may spill past
            # it and is truncated at dispatch time.
            assert params.start <= s.arrival < horizon_end
            assert s.arrival.second == 0 and s.arrival.microsecond == 0
            assert s.departure.second == 0 and s.departure.microsecond == 0
            assert s.energy_kwh <= s.max_power_kw * s.duration_hours + 1e-9
            assert s.max_power_kw in params.max_power_choices_kw
            by_cp.setdefault(s.cp_id, []).append(s)
        for sessions in by_cp.values():
            for a, b in zip(sessions, sessions[1:]):
                assert b.arrival >= a.departure

    def test_seed_changes_fleet(self):
        small = dataclasses.replace(reference_fleet_params(), n_cps=4, days=30)
        other = dataclasses.replace(small, seed=2)
        assert generate_synthetic_fleet(small) != generate_synthetic_fleet(other)


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------


@pytest.fixture
def small_fixtures(day_grid):
    sessions = [
        ChargingSession(
            session_id=f"s{i}",
            cp_id=f"cp{i % 2}",
            arrival=T0 + timedelta(hours=3 * i),
            departure=T0 + timedelta(hours=3 * i + 2),
            max_power_kw=11.0,
            energy_kwh=9.0 + i,
        )
        for i in range(4)
    ]
    tariff = SegmentedTariff((4.0, 8.0, 11.0), (0.0, 0.055, 0.9))
    prices = PriceSeries.hourly(T0, np.round(np.linspace(0.06, 0.4, 24), 4))
    strategy = DispatchStrategy.segmented_dynamic(tariff, prices)
    return sessions, strategy, day_grid


class TestResultRoundTrips:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_profile_table(self, small_fixtures, tmp_path, fmt):
        sessions, strategy, grid = small_fixtures
        profile, _ = dispatch_session(sessions[0], strategy, grid)
        table = profile_table(profile, strategy)
        path = tmp_path / f"profile.{fmt}"
        write_results(table, path, fmt)
        loaded = read_profile_table(path)
        assert loaded.session_id == table.session_id
        assert loaded.times_utc == table.times_utc
        assert np.array_equal(loaded.power_kw, table.power_kw)
        assert np.array_equal(loaded.segment_power_kw, table.segment_power_kw)
        assert np.array_equal(
            loaded.cumulative_energy_kwh, table.cumulative_energy_kwh
        )
        assert np.array_equal(
            loaded.marginal_price_eur_per_kwh, table.marginal_price_eur_per_kwh
        )

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_quantile_profile(self, small_fixtures, tmp_path, fmt):
        sessions, strategy, grid = small_fixtures
        profiles = [dispatch_session(s, strategy, grid)[0] for s in sessions]
        qp = quantile_by_hour(aggregate_profiles(profiles, grid), (0.25, 0.5, 0.75))
        path = tmp_path / f"quantile.{fmt}"
        write_results(qp, path, fmt)
        loaded = read_quantile_profile(path)
        assert loaded.quantile_levels == qp.quantile_levels
        assert loaded.n_cps == qp.n_cps
        assert np.array_equal(loaded.values_kw, qp.values_kw)
        assert np.array_equal(loaded.max_kw, qp.max_kw)

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_peak_study(self, small_fixtures, tmp_path, fmt):
        sessions, strategy, grid = small_fixtures
        result = peak_study(
            group_by_cp(sessions), strategy, grid, levels=(1, 2), repeats=4, seed=2
        )
        path = tmp_path / f"peaks.{fmt}"
        write_results(result, path, fmt)
        loaded = read_peak_study(path)
        assert loaded.levels == result.levels
        assert loaded.single_cp_kw == result.single_cp_kw
        assert loaded.summary_quantile_levels == result.summary_quantile_levels
        for a, b in zip(loaded.max_per_cp_kw, result.max_per_cp_kw):
            assert np.array_equal(a, b)

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_cost_table(self, small_fixtures, tmp_path, fmt):
        sessions, strategy, grid = small_fixtures
        table = session_cost_table(sessions, strategy, grid)
        path = tmp_path / f"costs.{fmt}"
        write_results(table, path, fmt)
        loaded = read_cost_table(path)
        assert loaded == table

    def test_marginal_price_tracks_occupied_segment(self, day_grid):
        tariff = SegmentedTariff((4.0, 8.0, 11.0), (0.0, 0.055, 0.9))
        strategy = DispatchStrategy.segmented_flat(tariff)
        session = ChargingSession(
            session_id="s1",
            cp_id="cp1",
            arrival=T0,
            departure=T0 + timedelta(hours=2),
            max_power_kw=11.0,
            energy_kwh=10.0,
        )
        profile, _ = dispatch_session(session, strategy, day_grid)
        table = profile_table(profile, strategy)
        # The next kWh on top of 4 kW costs the mid band price.
        for p, m in zip(table.power_kw, table.marginal_price_eur_per_kwh):
            if 4.0 <= p < 12.0:
                assert m == pytest.approx(0.055)


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------


BASE_SCENARIO = {
    "alias": "test",
    "strategy": "segmented_flat",
    "tariff": {
        "widths_kw": [4, 8, 11],
        "prices_eur_per_kwh": [0.0, 0.055, 0.9],
    },
    "grid": {
        "start": "2022-01-01T00:00:00Z",
        "end": "2022-01-08T00:00:00Z",
        "step_hours": 0.25,
    },
    "sessions": {"synthetic": {"seed": 3, "n_cps": 4, "days": 7}},
}


class TestScenario:
    def test_widths_and_thresholds_agree(self):
        by_widths = parse_scenario(BASE_SCENARIO)
        raw = dict(BASE_SCENARIO)
        raw["tariff"] = {
            "thresholds_kw": [4, 12, 23],
            "prices_eur_per_kwh": [0.0, 0.055, 0.9],
        }
        by_thresholds = parse_scenario(raw)
        assert by_widths.tariff_widths_kw == by_thresholds.tariff_widths_kw

    def test_both_forms_rejected(self):
        raw = dict(BASE_SCENARIO)
        raw["tariff"] = {
            "widths_kw": [4, 8, 11],
            "thresholds_kw": [4, 12, 23],
            "prices_eur_per_kwh": [0, 0, 0],
        }
        with pytest.raises(ConfigurationError):
            parse_scenario(raw)

    def test_capacity_mismatch_rejected(self):
        raw = dict(BASE_SCENARIO)
        raw["connection_capacity_kw"] = 20.0
        with pytest.raises(ConfigurationError):
            parse_scenario(raw)

    def test_quantile_price_resolution(self):
        raw = dict(BASE_SCENARIO)
        raw["strategy"] = "segmented_dynamic"
        raw["tariff"] = {
            "widths_kw": [4, 8, 11],
            "prices_eur_per_kwh": [0.0, "quantile:0.25", 0.9],
        }
        raw["prices"] = {"synthetic": {"seed": 11}}
        cfg = parse_scenario(raw)
        prices = PriceSeries.hourly(T0, np.arange(100, dtype=float) / 1000.0)
        tariff = cfg.resolve_tariff(prices)
        assert tariff.segment_prices_eur_per_kwh[1] == pytest.approx(0.02475)

    def test_quantile_without_prices_fails(self):
        raw = dict(BASE_SCENARIO)
        raw["tariff"] = {
            "widths_kw": [4, 8, 11],
            "prices_eur_per_kwh": [0.0, "quantile:0.05", 0.9],
        }
        cfg = parse_scenario(raw)
        with pytest.raises(ConfigurationError):
            cfg.resolve_tariff(None)

    def test_relative_paths_resolve_against_yaml_dir(self, tmp_path):
        scen = tmp_path / "nested" / "scen.yaml"
        scen.parent.mkdir()
        scen.write_text(
            "alias: rel\n"
            "strategy: dynamic_energy\n"
            "prices:\n  file: p.csv\n"
            "sessions:\n  file: s.csv\n",
            encoding="utf-8",
        )
        cfg = load_scenario(scen)
        assert cfg.prices_file == str(scen.parent / "p.csv")
        assert cfg.sessions_file == str(scen.parent / "s.csv")

    def test_build_strategy_checks_price_needs(self):
        raw = dict(BASE_SCENARIO)
        raw["strategy"] = "dynamic_energy"
        del raw["tariff"]
        cfg = parse_scenario(raw)
        with pytest.raises(ConfigurationError):
            cfg.build_strategy(None)

    def test_unknown_strategy_rejected(self):
        raw = dict(BASE_SCENARIO)
        raw["strategy"] = "psychic"
        with pytest.raises(ConfigurationError):
            parse_scenario(raw)


class TestPresets:
    EXPECTED = {
        "Unopt": (StrategyKind.UNOPTIMIZED, None),
        "DE": (StrategyKind.DYNAMIC_ENERGY, None),
        "FE-p+": (StrategyKind.SEGMENTED_FLAT, (4.0, 8.0, 11.0)),
        "FE-p-": (StrategyKind.SEGMENTED_FLAT, (2.0, 4.0, 17.0)),
        "DE-p+λ-": (StrategyKind.SEGMENTED_DYNAMIC, (4.0, 8.0, 11.0)),
        "DE-p+λ+": (StrategyKind.SEGMENTED_DYNAMIC, (4.0, 8.0, 11.0)),
        "DE-p-λ-": (StrategyKind.SEGMENTED_DYNAMIC, (2.0, 4.0, 17.0)),
        "DE-p-λ+": (StrategyKind.SEGMENTED_DYNAMIC, (2.0, 4.0, 17.0)),
    }

    def test_all_presets_load(self):
        assert set(list_presets()) == set(self.EXPECTED)
        for alias, (kind, widths) in self.EXPECTED.items():
            cfg = load_preset(alias)
            assert cfg.alias == alias
            assert cfg.strategy_kind is kind
            assert cfg.tariff_widths_kw == widths
            assert cfg.study.levels == (1, 2, 4, 8, 16, 32, 64, 128, 256)
            assert cfg.study.repeats == 100
            assert cfg.connection_capacity_kw == 23.0
            grid = cfg.build_grid()
            assert grid.n_steps == 35040

    def test_ascii_lambda_aliases(self):
        assert load_preset("DE-p+l-").alias == "DE-p+λ-"
        assert load_preset("de-p+L+").alias == "DE-p+λ+"

    def test_unknown_preset_lists_options(self):
        with pytest.raises(ConfigurationError, match="Unopt"):
            load_preset("nope")

    def test_quantile_presets_differ_in_mid_band_price(self):
        prices = make_synthetic_prices(T0, days=365, seed=11)
        lo = load_preset("DE-p+λ-").resolve_tariff(prices)
        hi = load_preset("DE-p+λ+").resolve_tariff(prices)
        assert lo.segment_prices_eur_per_kwh[1] < hi.segment_prices_eur_per_kwh[1]
        assert lo.segment_prices_eur_per_kwh[0] == 0.0
        assert hi.segment_prices_eur_per_kwh[2] == 0.9
