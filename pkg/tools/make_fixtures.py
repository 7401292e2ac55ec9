"""Regenerate the bundled CSV fixtures.

The sandbox these fixtures were built in had no route to a market-data
API, so the UST and LUNA series are reconstructions: daily values
interpolated (log-linear for prices) between hand-placed anchor points
that follow the widely reported shape of the May 2022 collapse. They are
not exchange data. Use ``stableponzi fetch`` to pull real series.

Run from the repository root: ``python tools/make_fixtures.py``.
"""

from __future__ import annotations

import math
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from stableponzi.data import PricePoint, TimeSeries, write_csv
from stableponzi.ledger import SCALE

OUT = Path(__file__).resolve().parents[1] / "src" / "stableponzi" / "fixtures"
START, END = date(2022, 3, 1), date(2022, 10, 17)

UST_PRICE = {
    "2022-03-01": 1.0005, "2022-03-15": 0.9995, "2022-04-01": 1.0003, "2022-04-20": 1.0000,
    "2022-05-06": 0.9990, "2022-05-07": 0.9870, "2022-05-08": 0.9850, "2022-05-09": 0.6700,
    "2022-05-10": 0.7600, "2022-05-11": 0.3700, "2022-05-12": 0.1500, "2022-05-13": 0.1300,
    "2022-05-14": 0.1600, "2022-05-16": 0.1300, "2022-05-20": 0.0800, "2022-06-10": 0.0350,
    "2022-07-15": 0.0200, "2022-08-15": 0.0300, "2022-09-10": 0.0500, "2022-09-20": 0.0400,
    "2022-10-17": 0.0270,
}
UST_SUPPLY = {
    "2022-03-01": 13.0e9, "2022-04-15": 17.0e9, "2022-05-08": 18.7e9, "2022-05-12": 16.0e9,
    "2022-05-20": 11.3e9, "2022-06-30": 10.0e9, "2022-10-17": 9.8e9,
}
LUNA_PRICE = {
    "2022-03-01": 86.0, "2022-03-15": 90.0, "2022-04-05": 116.0, "2022-04-20": 90.0,
    "2022-05-01": 80.0, "2022-05-06": 78.0, "2022-05-08": 66.0, "2022-05-09": 30.0,
    "2022-05-10": 18.0, "2022-05-11": 1.8, "2022-05-12": 0.0015, "2022-05-13": 0.00003,
    "2022-05-14": 0.00017, "2022-06-15": 0.00008, "2022-08-15": 0.00012, "2022-09-10": 0.0004,
    "2022-10-17": 0.00025,
}
LUNA_SUPPLY = {
    "2022-03-01": 380e6, "2022-05-08": 346e6, "2022-05-10": 400e6, "2022-05-11": 2.5e9,
    "2022-05-12": 1.3e11, "2022-05-13": 6.5e12, "2022-10-17": 6.9e12,
}


def _anchors(table: dict[str, float]) -> list[tuple[date, float]]:
    return sorted((date.fromisoformat(k), v) for k, v in table.items())


def interpolate(table: dict[str, float], day: date, log: bool) -> float:
    pts = _anchors(table)
    for (d0, v0), (d1, v1) in zip(pts, pts[1:]):
        if d0 <= day <= d1:
            w = (day - d0).days / (d1 - d0).days
            if log:
                return math.exp(math.log(v0) + w * (math.log(v1) - math.log(v0)))
            return v0 + w * (v1 - v0)
    raise ValueError(day)


def units(x: float) -> int:
    return int(round(x * SCALE))


def days(start: date, end: date):
    d = start
    while d <= end:
        yield d
        d += timedelta(days=1)


def stamp(d: date) -> datetime:
    return datetime(d.year, d.month, d.day, tzinfo=timezone.utc)


def series(price: dict, supply: dict | None, token: str) -> TimeSeries:
    pts = []
    for d in days(START, END):
        p = units(interpolate(price, d, log=True))
        s = round(interpolate(supply, d, log=True)) * SCALE if supply else None
        cap = (p * s // SCALE) // SCALE * SCALE if s is not None else None
        pts.append(PricePoint(stamp(d), p, s, cap))
    return TimeSeries(token, tuple(pts))


def ampl_like() -> TimeSeries:
    # log-symmetric oscillation: the product of daily prices stays bounded,
    # so a full-adjustment rebase never runs the supply away
    pts = []
    for i, d in enumerate(days(START, END)):
        x = 0.22 * math.sin(2 * math.pi * i / 29) + 0.05 * math.sin(2 * math.pi * i / 7.3)
        pts.append(PricePoint(stamp(d), units(math.exp(x)), None, None))
    return TimeSeries("ampl", tuple(pts))


def bac_scripted() -> TimeSeries:
    prices = [1.0] * 3 + [0.8] * 5 + [1.2] + [1.0] * 6
    start = date(2022, 3, 1)
    pts = [PricePoint(stamp(start + timedelta(days=i)), units(p)) for i, p in enumerate(prices)]
    return TimeSeries("bac", tuple(pts))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    write_csv(series(UST_PRICE, UST_SUPPLY, "ust"), OUT / "ust.csv")
    write_csv(series(LUNA_PRICE, LUNA_SUPPLY, "luna"), OUT / "luna.csv")
    write_csv(ampl_like(), OUT / "ampl.csv")
    write_csv(bac_scripted(), OUT / "bac_scripted.csv")


if __name__ == "__main__":
    main()
