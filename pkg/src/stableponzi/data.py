"""Price-series CSV ingestion, remote fetching, and run-report persistence."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from decimal import ROUND_DOWN, Decimal
from pathlib import Path
from typing import Any, Callable

from .ledger import SCALE, LedgerError, format_amount, parse_amount, parse_signed
from .ponzi import PonziVerdict, WorstCohort
from .record import CohortTrack, RunRecord
from .scenario import Scenario

log = logging.getLogger(__name__)

CSV_HEADER = ("timestamp", "price_usd", "total_supply", "market_cap")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"
MAX_FILL_DAYS = 3
SCHEMA_VERSION = 1
CACHE_ENV = "STABLEPONZI_CACHE_DIR"
MAX_ATTEMPTS = 3


class DataError(ValueError):
    pass


class Malformed(DataError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


class NonMonotonicTimestamps(DataError):
    pass


class GapTooLarge(DataError):
    pass


class EmptySeries(DataError):
    pass


class IoError(DataError):
    pass


class SchemaMismatch(DataError):
    def __init__(self, version: Any) -> None:
        super().__init__(f"report schema version {version!r} is not {SCHEMA_VERSION}")
        self.version = version


class RemoteError(DataError):
    pass


class CoinNotFound(RemoteError):
    pass


class RateLimited(RemoteError):
    pass


@dataclass(frozen=True)
class PricePoint:
    timestamp: datetime
    price_usd: int
    total_supply: int | None = None
    market_cap: int | None = None


@dataclass(frozen=True)
class TimeSeries:
    token: str
    points: tuple[PricePoint, ...]
    filled: tuple[datetime, ...] = field(default=(), compare=False)
    zero_prices: tuple[datetime, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def prices(self) -> list[int]:
        return [p.price_usd for p in self.points]

    def supplies(self) -> list[int | None]:
        return [p.total_supply for p in self.points]


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


def _optional(text: str) -> int | None:
    return parse_amount(text) if text != "" else None


def parse_csv(text: str, token: str = "") -> TimeSeries:
    """Validate canonical CSV text and forward-fill short gaps."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise EmptySeries("empty file")
    if tuple(rows[0]) != CSV_HEADER:
        raise Malformed(1, f"header must be {','.join(CSV_HEADER)}")
    raw: list[PricePoint] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise Malformed(lineno, f"expected {len(CSV_HEADER)} fields, got {len(row)}")
        try:
            ts = parse_timestamp(row[0])
        except ValueError:
            raise Malformed(lineno, f"bad timestamp {row[0]!r}") from None
        try:
            point = PricePoint(ts, parse_amount(row[1]), _optional(row[2]), _optional(row[3]))
        except LedgerError as exc:
            raise Malformed(lineno, str(exc)) from None
        raw.append(point)
    if not raw:
        raise EmptySeries("no data rows")

    points = [raw[0]]
    filled: list[datetime] = []
    for prev, cur in zip(raw, raw[1:]):
        gap = (cur.timestamp.date() - prev.timestamp.date()).days
        if gap <= 0:
            raise NonMonotonicTimestamps(f"{format_timestamp(cur.timestamp)} does not follow {format_timestamp(prev.timestamp)}")
        missing = gap - 1
        if missing > MAX_FILL_DAYS:
            raise GapTooLarge(f"{missing} missing days after {format_timestamp(prev.timestamp)}")
        for k in range(1, missing + 1):
            ts = prev.timestamp + timedelta(days=k)
            points.append(PricePoint(ts, prev.price_usd, prev.total_supply, prev.market_cap))
            filled.append(ts)
        points.append(cur)
    zeros = tuple(p.timestamp for p in points if p.price_usd == 0)
    return TimeSeries(token, tuple(points), tuple(filled), zeros)


def load_csv(path: str | Path, token: str | None = None) -> TimeSeries:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc
    series = parse_csv(text, token if token is not None else path.stem)
    if series.filled:
        log.info("%s: forward-filled %d day(s)", path, len(series.filled))
    return series


def _opt(v: int | None) -> str:
    return "" if v is None else format_amount(v)


def series_to_csv(series: TimeSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in series.points:
        w.writerow([format_timestamp(p.timestamp), format_amount(p.price_usd), _opt(p.total_supply), _opt(p.market_cap)])
    return buf.getvalue()


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        Path(tmp).unlink(missing_ok=True)
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


def write_csv(series: TimeSeries, path: str | Path) -> None:
    atomic_write_text(path, series_to_csv(series))


# --- remote fetch ---------------------------------------------------------


def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "stableponzi"


def _to_units(value: float) -> int:
    return int(Decimal(repr(value)).quantize(Decimal(1) / SCALE, rounding=ROUND_DOWN) * SCALE)


def _http_get(url: str, timeout: float) -> tuple[int, dict[str, str], bytes]:
    req = urllib.request.Request(url, headers={"Accept": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, dict(resp.headers), resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, dict(exc.headers or {}), exc.read() or b""
    except urllib.error.URLError as exc:
        raise RemoteError(f"{url}: {exc.reason}") from exc


def daily_points(payload: dict[str, Any]) -> list[PricePoint]:
    """Collapse market-chart samples to the last sample of each UTC day."""
    prices: dict[datetime, float] = {}
    caps: dict[datetime, float] = {}
    for target, key in ((prices, "prices"), (caps, "market_caps")):
        for ms, value in payload.get(key) or []:
            if value is None:
                continue
            day = datetime.fromtimestamp(ms / 1000, tz=timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)
            target[day] = value
    points = []
    for day in sorted(prices):
        price = _to_units(max(prices[day], 0.0))
        cap = _to_units(caps[day]) if day in caps else None
        supply = cap * SCALE // price if cap is not None and price > 0 else None
        points.append(PricePoint(day, price, supply, cap))
    return points


def fetch_series(
    api_base: str,
    coin_id: str,
    start: datetime,
    end: datetime,
    *,
    cache: str | Path | None = None,
    timeout: float = 30.0,
    sleep: Callable[[float], None] = time.sleep,
    get: Callable[[str, float], tuple[int, dict[str, str], bytes]] = _http_get,
) -> tuple[TimeSeries, Path]:
    """Fetch a daily series from a market-chart-range endpoint, with caching.

    The endpoint is ``{api_base}/coins/{coin_id}/market_chart/range`` with
    ``vs_currency=usd&from=<unix>&to=<unix>`` and a JSON body holding
    ``prices`` and ``market_caps`` as ``[[unix_ms, value], ...]``.
    """
    cache_root = Path(cache) if cache is not None else cache_dir()
    fname = f"{coin_id}_{start.strftime('%Y%m%d')}_{end.strftime('%Y%m%d')}.csv"
    path = cache_root / fname
    if path.exists():
        return load_csv(path, coin_id), path

    query = urllib.parse.urlencode(
        {"vs_currency": "usd", "from": int(start.timestamp()), "to": int(end.timestamp())}
    )
    url = f"{api_base.rstrip('/')}/coins/{urllib.parse.quote(coin_id)}/market_chart/range?{query}"
    for attempt in range(1, MAX_ATTEMPTS + 1):
        status, headers, body = get(url, timeout)
        if status == 200:
            break
        if status == 404:
            raise CoinNotFound(f"unknown coin id {coin_id!r}")
        retry = attempt < MAX_ATTEMPTS
        if status == 429:
            if not retry:
                raise RateLimited(f"rate limited after {MAX_ATTEMPTS} attempts")
            wait = headers.get("Retry-After") or headers.get("retry-after") or "1"
            try:
                delay = float(wait)
            except ValueError:
                delay = 1.0
            log.warning("rate limited, retrying in %.1fs", delay)
            sleep(delay)
            continue
        if not retry:
            raise RemoteError(f"HTTP {status} from {url} after {MAX_ATTEMPTS} attempts")
        sleep(float(attempt))
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise RemoteError(f"invalid JSON from {url}") from exc
    points = daily_points(payload)
    if not points:
        raise EmptySeries(f"no prices for {coin_id}")
    cache_root.mkdir(parents=True, exist_ok=True)
    text = series_to_csv(TimeSeries(coin_id, tuple(points)))
    series = parse_csv(text, coin_id)
    atomic_write_text(path, text)
    return series, path


# --- run reports ----------------------------------------------------------


def _opt_amount(v: int | None) -> str | None:
    return None if v is None else format_amount(v)


def _opt_parse(v: str | None) -> int | None:
    return None if v is None else parse_signed(v)


def verdict_to_dict(v: PonziVerdict) -> dict[str, Any]:
    return {
        "condition_i": v.condition_i,
        "condition_ii": v.condition_ii,
        "rational": v.rational,
        "weak_pareto": v.weak_pareto,
        "strict_pareto": v.strict_pareto,
        "vacuous_pareto": v.vacuous_pareto,
        "window": list(v.window),
        "worst_cohort": None
        if v.worst_cohort is None
        else {"id": v.worst_cohort.id, "shortfall_usd": v.worst_cohort.shortfall_usd},
        "gamma_d_series": [format_amount(x) for x in v.gamma_d_series],
    }


def verdict_from_dict(d: dict[str, Any]) -> PonziVerdict:
    worst = d["worst_cohort"]
    return PonziVerdict(
        condition_i=bool(d["condition_i"]),
        condition_ii=bool(d["condition_ii"]),
        rational=bool(d["rational"]),
        gamma_d_series=tuple(parse_signed(x) for x in d["gamma_d_series"]),
        worst_cohort=None if worst is None else WorstCohort(str(worst["id"]), float(worst["shortfall_usd"])),
        weak_pareto=bool(d["weak_pareto"]),
        strict_pareto=bool(d["strict_pareto"]),
        vacuous_pareto=bool(d["vacuous_pareto"]),
        window=tuple(int(x) for x in d["window"]),
    )


def report_to_dict(run: RunRecord) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "engine_version": run.engine_version,
        "scenario": run.scenario.to_dict(),
        "horizon": run.horizon,
        "series": {k: [format_amount(x) for x in v] for k, v in run.series.items()},
        "cohorts": [
            {
                "id": c.id,
                "token": c.token,
                "join_period": c.join_period,
                "invested_usd": format_amount(c.invested_usd),
                "exit_period": c.exit_period,
                "exit_proceeds_usd": _opt_amount(c.exit_proceeds_usd),
                "exit_units": _opt_amount(c.exit_units),
                "units": [format_amount(x) for x in c.units],
                "utility": [format_amount(x) for x in c.utility],
            }
            for c in run.cohorts
        ],
        "verdict": None if run.verdict is None else verdict_to_dict(run.verdict),
        "notes": list(run.notes),
    }


def report_from_dict(d: dict[str, Any]) -> RunRecord:
    if not isinstance(d, dict):
        raise IoError("report is not a JSON object")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(d.get("schema_version"))
    try:
        cohorts = [
            CohortTrack(
                id=c["id"],
                token=c["token"],
                join_period=int(c["join_period"]),
                invested_usd=parse_signed(c["invested_usd"]),
                exit_period=c["exit_period"],
                exit_proceeds_usd=_opt_parse(c["exit_proceeds_usd"]),
                units=[parse_signed(x) for x in c["units"]],
                utility=[parse_signed(x) for x in c["utility"]],
                exit_units=_opt_parse(c["exit_units"]),
            )
            for c in d["cohorts"]
        ]
        return RunRecord(
            scenario=Scenario.from_dict(d["scenario"]),
            horizon=int(d["horizon"]),
            series={k: [parse_signed(x) for x in v] for k, v in d["series"].items()},
            cohorts=cohorts,
            verdict=None if d["verdict"] is None else verdict_from_dict(d["verdict"]),
            engine_version=str(d.get("engine_version", "")),
            notes=[str(n) for n in d.get("notes", [])],
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise IoError(f"malformed report: {exc!r}") from exc


def dumps_report(run: RunRecord) -> str:
    return json.dumps(report_to_dict(run), indent=2, sort_keys=True) + "\n"


def write_report(run: RunRecord, path: str | Path) -> None:
    atomic_write_text(path, dumps_report(run))


def read_report(path: str | Path) -> RunRecord:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: not valid JSON ({exc.msg})") from exc
    return report_from_dict(data)
