"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal error. A "not rational" verdict is a successful evaluation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .data import DataError, atomic_write_text, fetch_series, load_csv, read_report, write_report
from .engine import EngineError, run_scenario
from .ledger import LedgerError, format_amount
from .ponzi import ClassifierConfig, PonziError, classify_rational_ponzi
from .record import RunRecord
from .scenario import MODES, PROTOCOLS, ConfigInvalid, Scenario, load_scenario

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("stableponzi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _scenario(args: argparse.Namespace, **overrides) -> Scenario:
    if args.scenario:
        base = load_scenario(args.scenario)
        return base.with_overrides(**overrides)
    if overrides.get("protocol") is None:
        raise UsageError("--protocol or --scenario is required")
    return Scenario.from_dict({k: v for k, v in overrides.items() if v is not None})


def _summary_line(run: RunRecord) -> str:
    v = run.verdict
    worst = v.worst_cohort.id if v.worst_cohort else "-"
    return (
        f"rational={str(v.rational).lower()} condition_i={str(v.condition_i).lower()} "
        f"condition_ii={str(v.condition_ii).lower()} worst_cohort={worst} periods={run.horizon}"
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    s = _scenario(args, protocol=args.protocol, mode=args.mode, horizon=args.periods)
    if args.scenario is None and args.mode is None:
        s = s.with_overrides(mode="endogenous")
    run = run_scenario(s)
    write_report(run, args.out)
    print(_summary_line(run))
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    mode = args.mode
    s = _scenario(args, protocol=args.protocol, mode=mode)
    if s.mode == "endogenous":
        raise ConfigInvalid("replay runs use replay or idealized-rebase mode")
    data = {"stable": load_csv(args.stable_csv, "stable")}
    if args.share_csv:
        data["share"] = load_csv(args.share_csv, "share")
    run = run_scenario(s, data)
    write_report(run, args.out)
    print(_summary_line(run))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    run = read_report(args.run)
    config = ClassifierConfig(window=args.window, epsilon=args.epsilon)
    verdict = classify_rational_ponzi(run, config)
    print(json.dumps(verdict.summary(), sort_keys=True))
    return EXIT_OK


def _write_series(path: Path, values: Sequence[int]) -> None:
    lines = ["period,value"] + [f"{t},{format_amount(v)}" for t, v in enumerate(values, start=1)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_plot(args: argparse.Namespace) -> int:
    run = read_report(args.run)
    if run.horizon < 1 or not run.series.get("price.stable"):
        raise DataError("run has no periods to plot")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"{out}: {exc.strerror or exc}") from exc
    if args.cohort:
        track = run.cohort(args.cohort)
    else:
        track = run.cohorts[0] if run.cohorts else None
    zeros = [0] * run.horizon
    verdict = run.verdict or classify_rational_ponzi(run)
    _write_series(out / "price.csv", run.series["price.stable"])
    _write_series(out / "amounts.csv", track.units if track else zeros)
    _write_series(out / "utility.csv", track.utility if track else zeros)
    _write_series(out / "gamma_d.csv", verdict.gamma_d_series)
    print(f"wrote 4 series to {out}")
    return EXIT_OK


def _date(text: str) -> datetime:
    try:
        return datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def cmd_fetch(args: argparse.Namespace) -> int:
    series, path = fetch_series(args.api_base, args.coin, args.start, args.end, cache=args.cache_dir)
    print(f"{len(series)} points cached at {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stableponzi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a scenario and write a JSON report")
    sim.add_argument("--protocol", choices=PROTOCOLS)
    sim.add_argument("--mode", choices=MODES)
    sim.add_argument("--periods", type=int)
    sim.add_argument("--scenario")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("replay", help="replay historical CSV prices")
    rep.add_argument("--protocol", choices=PROTOCOLS)
    rep.add_argument("--mode", choices=("replay", "idealized-rebase"))
    rep.add_argument("--stable-csv", required=True)
    rep.add_argument("--share-csv")
    rep.add_argument("--scenario")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_replay)

    ev = sub.add_parser("evaluate", help="print the rational Ponzi verdict of a report")
    ev.add_argument("--run", required=True)
    ev.add_argument("--window", type=int, default=ClassifierConfig.window)
    ev.add_argument("--epsilon", type=float, default=ClassifierConfig.epsilon)
    ev.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("plot", help="write plot-ready CSV series")
    pl.add_argument("--run", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--cohort")
    pl.set_defaults(func=cmd_plot)

    fe = sub.add_parser("fetch", help="download and cache a daily price series")
    fe.add_argument("--api-base", default="https://api.coingecko.com/api/v3")
    fe.add_argument("--coin", required=True)
    fe.add_argument("--from", dest="start", type=_date, required=True)
    fe.add_argument("--to", dest="end", type=_date, required=True)
    fe.add_argument("--cache-dir")
    fe.set_defaults(func=cmd_fetch)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"stableponzi: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigInvalid, DataError, LedgerError, EngineError, PonziError, KeyError, OSError) as exc:
        print(f"stableponzi: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"stableponzi: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
