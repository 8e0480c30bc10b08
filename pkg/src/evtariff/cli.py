"""Command line interface.

Subcommands::

    evtariff generate          write a synthetic session CSV (and prices)
    evtariff dispatch-session  dispatch one session, write its profile table
    evtariff quantile-profile  hour-of-day load quantiles for a scenario
    evtariff peak-study        per-CP annual peak vs. fleet size
    evtariff presets           list built-in scenario aliases

Report commands write CSV (or JSON) tables, render a PNG figure next to
each table unless ``--no-plots`` is given, and drop a run manifest with
input digests and the exact invocation beside every result.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .aggregate import (
    aggregate_profiles,
    group_by_cp,
    peak_study,
    quantile_by_hour,
)
from .core import ConfigurationError, PriceSeries, TimeGrid, ValidationError, as_utc
from .dispatch import DispatchStrategy, dispatch_session, evaluate_cost
from .io import (
    ScenarioConfig,
    SyntheticFleetParams,
    generate_synthetic_fleet,
    list_presets,
    load_preset,
    load_prices,
    load_scenario,
    load_sessions,
    make_synthetic_prices,
    profile_table,
    write_prices,
    write_results,
    write_sessions,
)
from .io.timefmt import format_utc, parse_utc

__all__ = ["main"]


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except (ConfigurationError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, multi_scenario: bool) -> None:
    action = "append" if multi_scenario else "store"
    p.add_argument(
        "--scenario",
        action=action,
        required=True,
        help="preset alias or path to a scenario YAML file"
        + (" (repeatable)" if multi_scenario else ""),
    )
    p.add_argument("--sessions", help="session CSV overriding the scenario's source")
    p.add_argument("--prices", help="hourly price CSV overriding the scenario's source")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="master seed (default: scenario's study seed)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figure rendering")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evtariff",
        description="EV charging dispatch under segmented network tariffs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("generate", help="write a synthetic session fleet to CSV")
    p.add_argument("--out", required=True, help="output session CSV path")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n-cps", type=int, default=256)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--start", default="2022-01-01T00:00:00Z")
    p.add_argument("--mean-sessions-per-cp", type=float, default=220.0)
    p.add_argument("--prices-out", help="also write a synthetic hourly price CSV here")
    p.add_argument("--prices-seed", type=int, default=11)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("dispatch-session", help="dispatch one session and tabulate it")
    _add_common(p, multi_scenario=False)
    p.add_argument("--session-id", required=True, help="session to dispatch")
    p.set_defaults(func=_cmd_dispatch_session)

    p = sub.add_parser("quantile-profile", help="hour-of-day load quantiles per CP")
    _add_common(p, multi_scenario=True)
    p.add_argument(
        "--quantiles",
        help="comma-separated quantile levels (default: scenario's)",
    )
    p.set_defaults(func=_cmd_quantile_profile)

    p = sub.add_parser("peak-study", help="annual per-CP peak vs. fleet size")
    _add_common(p, multi_scenario=True)
    p.add_argument("--levels", help="comma-separated fleet sizes (default: scenario's)")
    p.add_argument("--repeats", type=int, help="fleet draws per size (default: scenario's)")
    p.set_defaults(func=_cmd_peak_study)

    p = sub.add_parser("presets", help="list built-in scenario presets")
    p.set_defaults(func=_cmd_presets)

    return parser


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _resolve_scenarios(values) -> list[ScenarioConfig]:
    names: list[str] = []
    for v in values if isinstance(values, list) else [values]:
        names.extend(x for x in v.split(",") if x)
    configs = []
    for name in names:
        path = Path(name)
        if path.suffix in (".yaml", ".yml") or path.exists():
            configs.append(load_scenario(path))
        else:
            configs.append(load_preset(name))
    if not configs:
        raise ConfigurationError("no scenario given")
    return configs


def _slug(alias: str) -> str:
    out = alias.replace("λ", "l").replace("Λ", "l")
    return "".join(c if c.isalnum() or c in "+-_" else "_" for c in out)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_inputs(cfg: ScenarioConfig, args) -> tuple[TimeGrid, list, PriceSeries | None, dict]:
    """Build the grid and load sessions/prices, honoring CLI overrides."""
    grid = cfg.build_grid()
    inputs: dict = {}

    prices = None
    prices_path = args.prices or cfg.prices_file
    if prices_path:
        prices = load_prices(prices_path, grid)
        inputs["prices"] = {"path": str(prices_path), "sha256": _sha256(Path(prices_path))}
    elif cfg.prices_synthetic_seed is not None:
        days = math.ceil(grid.total_hours / 24.0)
        prices = make_synthetic_prices(grid.start, days, seed=cfg.prices_synthetic_seed)
        inputs["prices"] = {"synthetic": {"seed": cfg.prices_synthetic_seed, "days": days}}

    sessions_path = args.sessions or cfg.sessions_file
    if sessions_path:
        loaded = load_sessions(sessions_path)
        if loaded.rejects:
            print(
                f"warning: {len(loaded.rejects)} session rows rejected "
                f"({loaded.rejects[0].reason} at line {loaded.rejects[0].line_no} first)",
                file=sys.stderr,
            )
        if loaded.clip_flagged:
            print(
                f"warning: {len(loaded.clip_flagged)} sessions request more energy "
                "than their window can deliver; they will be clipped",
                file=sys.stderr,
            )
        sessions = loaded.sessions
        inputs["sessions"] = {
            "path": str(sessions_path),
            "sha256": _sha256(Path(sessions_path)),
            "rejected_rows": len(loaded.rejects),
        }
    elif cfg.sessions_synthetic is not None:
        params = cfg.sessions_synthetic
        if args.seed is not None:
            params = dataclasses.replace(params, seed=args.seed)
        sessions = generate_synthetic_fleet(params)
        inputs["sessions"] = {"synthetic": _params_dict(params)}
    else:
        raise ConfigurationError(
            f"scenario {cfg.alias}: no session source configured; pass --sessions"
        )
    return grid, sessions, prices, inputs


def _params_dict(params: SyntheticFleetParams) -> dict:
    d = dataclasses.asdict(params)
    d["start"] = format_utc(params.start)
    return d


def _write_manifest(
    out_dir: Path,
    stem: str,
    args,
    cfg: ScenarioConfig | None,
    grid: TimeGrid | None,
    seed,
    inputs: dict,
    outputs: list[Path],
    started: float,
) -> Path:
    payload = {
        "tool": "evtariff",
        "tool_version": __version__,
        "subcommand": args.subcommand,
        "argv": sys.argv[1:] if sys.argv[0].endswith(("evtariff", "cli.py")) else None,
        "arguments": {
            k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
        },
        "scenario": cfg.alias if cfg else None,
        "seed": seed,
        "grid": None
        if grid is None
        else {
            "start": format_utc(grid.start),
            "end": format_utc(grid.end),
            "step_hours": grid.step_hours,
        },
        "inputs": inputs,
        "outputs": [
            {"path": p.name, "sha256": _sha256(p)} for p in outputs
        ],
        "wall_clock_seconds": round(time.monotonic() - started, 3),
        "created_utc": format_utc(_now_utc()),
    }
    path = out_dir / f"{stem}_manifest.json"
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def _now_utc():
    from datetime import datetime, timezone

    return datetime.now(timezone.utc)


def _table_path(out_dir: Path, stem: str, fmt: str) -> Path:
    return out_dir / f"{stem}.{'json' if fmt == 'json' else 'csv'}"


def _effective_seed(cfg: ScenarioConfig, args) -> int:
    seed = args.seed if args.seed is not None else cfg.study.seed
    if not cfg.study.paired_fleets:
        # Unpaired draws: fold the alias into the seed so every scenario
        # samples different fleets.
        mix = zlib.crc32(cfg.alias.encode("utf-8"))
        seed = int(np.random.SeedSequence(entropy=(seed, mix)).generate_state(1)[0])
    return seed


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    started = time.monotonic()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    params = SyntheticFleetParams(
        n_cps=args.n_cps,
        start=parse_utc(args.start),
        days=args.days,
        mean_sessions_per_cp=args.mean_sessions_per_cp,
        seed=args.seed,
    )
    sessions = generate_synthetic_fleet(params)
    write_sessions(sessions, out)
    outputs = [out]
    inputs = {"sessions": {"synthetic": _params_dict(params)}}
    if args.prices_out:
        prices_out = Path(args.prices_out)
        prices_out.parent.mkdir(parents=True, exist_ok=True)
        series = make_synthetic_prices(params.start, params.days, seed=args.prices_seed)
        write_prices(series, prices_out)
        outputs.append(prices_out)
        inputs["prices"] = {"synthetic": {"seed": args.prices_seed, "days": params.days}}
    _write_manifest(
        out.parent, out.stem, args, None, None, args.seed, inputs, outputs, started
    )
    n_cps = len({s.cp_id for s in sessions})
    print(f"wrote {len(sessions)} sessions for {n_cps} charge points to {out}")
    return 0


def _cmd_dispatch_session(args) -> int:
    started = time.monotonic()
    cfg = _resolve_scenarios(args.scenario)[0]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, sessions, prices, inputs = _load_inputs(cfg, args)
    strategy = cfg.build_strategy(prices)

    wanted = {s.session_id: s for s in sessions}
    if args.session_id not in wanted:
        raise ValidationError(
            f"session {args.session_id!r} not found among {len(wanted)} sessions"
        )
    session = wanted[args.session_id]
    profile, report = dispatch_session(session, strategy, grid)
    cost = evaluate_cost(profile, strategy)
    table = profile_table(profile, strategy)

    stem = f"profile_{_slug(cfg.alias)}_{_slug(session.session_id)}"
    table_path = _table_path(out_dir, stem, args.format)
    write_results(table, table_path, args.format)
    outputs = [table_path]
    if not args.no_plots:
        from .plots import save_session_profile

        outputs.append(
            save_session_profile(
                table,
                out_dir / f"{stem}.png",
                tariff=strategy.tariff,
                title=f"{cfg.alias}: {session.session_id}",
            )
        )
    _write_manifest(out_dir, stem, args, cfg, grid, args.seed, inputs, outputs, started)

    if report.clipped:
        print(
            f"warning: requested {report.requested_kwh:.3f} kWh exceeds the window;"
            f" delivering {report.granted_kwh:.3f} kWh",
            file=sys.stderr,
        )
    print(
        f"{cfg.alias} {session.session_id}: delivered {profile.energy_kwh():.3f} kWh, "
        f"peak {profile.peak_kw:.2f} kW, energy cost {cost.energy_cost_eur:.4f} EUR, "
        f"network cost {cost.network_cost_eur:.4f} EUR, total {cost.total_eur:.4f} EUR"
    )
    return 0


def _dispatch_all(sessions, strategy: DispatchStrategy, grid: TimeGrid):
    profiles = []
    for session in sessions:
        try:
            profile, _ = dispatch_session(session, strategy, grid)
        except ValidationError:
            continue
        profiles.append(profile)
    return profiles


def _cmd_quantile_profile(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for cfg in _resolve_scenarios(args.scenario):
        started = time.monotonic()
        grid, sessions, prices, inputs = _load_inputs(cfg, args)
        strategy = cfg.build_strategy(prices)
        levels = (
            tuple(float(q) for q in args.quantiles.split(","))
            if args.quantiles
            else cfg.study.quantile_levels
        )
        if not sessions:
            print(
                f"warning: scenario {cfg.alias} has no sessions; writing an all-zero profile",
                file=sys.stderr,
            )
        profiles = _dispatch_all(sessions, strategy, grid)
        aggregate = aggregate_profiles(profiles, grid)
        qp = quantile_by_hour(aggregate, levels)

        stem = f"quantile_{_slug(cfg.alias)}"
        table_path = _table_path(out_dir, stem, args.format)
        write_results(qp, table_path, args.format)
        outputs = [table_path]
        if not args.no_plots:
            from .plots import save_quantile_profile

            outputs.append(
                save_quantile_profile(qp, out_dir / f"{stem}.png", title=cfg.alias)
            )
        _write_manifest(out_dir, stem, args, cfg, grid, args.seed, inputs, outputs, started)
        print(f"{cfg.alias}: quantile profile over {aggregate.n_cps} charge points -> {table_path}")
    return 0


def _cmd_peak_study(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for cfg in _resolve_scenarios(args.scenario):
        started = time.monotonic()
        grid, sessions, prices, inputs = _load_inputs(cfg, args)
        strategy = cfg.build_strategy(prices)
        levels = (
            tuple(int(x) for x in args.levels.split(","))
            if args.levels
            else cfg.study.levels
        )
        repeats = args.repeats if args.repeats is not None else cfg.study.repeats
        seed = _effective_seed(cfg, args)

        result = peak_study(
            group_by_cp(sessions),
            strategy,
            grid,
            levels=levels,
            repeats=repeats,
            seed=seed,
            summary_quantile_levels=cfg.study.quantile_levels,
        )

        stem = f"peak_study_{_slug(cfg.alias)}"
        table_path = _table_path(out_dir, stem, args.format)
        write_results(result, table_path, args.format)
        outputs = [table_path]
        if not args.no_plots:
            from .plots import save_peak_study

            outputs.append(
                save_peak_study(result, out_dir / f"{stem}.png", title=cfg.alias)
            )
        _write_manifest(out_dir, stem, args, cfg, grid, seed, inputs, outputs, started)
        biggest = max(levels)
        print(
            f"{cfg.alias}: median peak {result.median_max_per_cp(biggest):.3f} kW/CP "
            f"at N={biggest} -> {table_path}"
        )
    return 0


def _cmd_presets(args) -> int:
    for alias in list_presets():
        cfg = load_preset(alias)
        tariff = (
            "-"
            if cfg.tariff_widths_kw is None
            else "/".join(f"{w:g}" for w in cfg.tariff_widths_kw) + " kW"
        )
        print(f"{alias:10s} {cfg.strategy_kind.value:18s} segments: {tariff}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
