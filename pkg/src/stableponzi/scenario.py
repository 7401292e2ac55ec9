"""Scenario configuration.

Scenario files are flat TOML: top-level keys only, with cohorts and
shocks given as arrays of inline tables. Decimal quantities are written
as strings so they parse exactly::

    protocol = "dual"
    mode = "endogenous"
    horizon = 60
    stable_supply = "1000000"
    share_supply = "1000000"
    share_price = "50"
    cohorts = [{id = "c1", join = 1, usd = "1"}]
    shocks = [{period = 2, token = "stable", fraction = "0.1", length = 10}]

See ``KEYS`` for every accepted key and its default.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .ledger import LedgerError, parse_amount
from .ponzi import DiscountCurve, PonziError

PROTOCOLS = ("rebase", "dual", "tritoken")
MODES = ("replay", "endogenous", "idealized-rebase")
TOKENS = ("stable", "share")


class ConfigInvalid(ValueError):
    pass


def _fraction(text: str, key: str) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigInvalid(f"{key}: not a number: {text!r}") from exc


def _amount(text: Any, key: str) -> int:
    try:
        return parse_amount(str(text))
    except LedgerError as exc:
        raise ConfigInvalid(f"{key}: {exc}") from exc


@dataclass(frozen=True)
class CohortSpec:
    id: str
    join: int
    usd: str = "1"
    exit: int | None = None


@dataclass(frozen=True)
class Shock:
    period: int
    token: str
    fraction: str


@dataclass(frozen=True)
class Scenario:
    protocol: str
    mode: str = "replay"
    horizon: int | None = None
    name: str = ""
    cohorts: tuple[CohortSpec, ...] = (CohortSpec("c1", 1, "1"),)
    shocks: tuple[Shock, ...] = ()
    arb_threshold: str = "0.01"
    arb_capacity: str = "0.01"  # fraction of stable supply per period
    discount_rate: str = "0"
    discount_rates: tuple[str, ...] = ()
    target: str = "1"
    rebase_lag: int = 1
    stable_supply: str = "1000000"
    share_supply: str = "1000000"
    share_price: str = "50"
    pool_depth: str = "0.1"
    bond_agent_cash: str = "0.1"  # fraction of cash supply held by the bond buyer
    bond_purchase: str = "0.01"  # fraction of cash supply bid for bonds per below-peg period

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigInvalid(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.mode not in MODES:
            raise ConfigInvalid(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "idealized-rebase" and self.protocol != "rebase":
            raise ConfigInvalid("idealized-rebase mode only applies to the rebase protocol")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigInvalid(f"horizon must be >= 1, got {self.horizon}")
        if self.rebase_lag < 1:
            raise ConfigInvalid("rebase_lag must be >= 1")
        seen = set()
        for c in self.cohorts:
            if c.id in seen:
                raise ConfigInvalid(f"duplicate cohort id {c.id!r}")
            seen.add(c.id)
            if c.join < 1:
                raise ConfigInvalid(f"cohort {c.id}: join period must be >= 1")
            if c.exit is not None and c.exit < c.join:
                raise ConfigInvalid(f"cohort {c.id}: exit before join")
            if _amount(c.usd, f"cohort {c.id} usd") <= 0:
                raise ConfigInvalid(f"cohort {c.id}: investment must be positive")
        for s in self.shocks:
            if s.token not in TOKENS:
                raise ConfigInvalid(f"shock token must be one of {TOKENS}, got {s.token!r}")
            if s.period < 1:
                raise ConfigInvalid("shock period must be >= 1")
            f = _fraction(s.fraction, "shock fraction")
            if not 0 < f <= 1:
                raise ConfigInvalid(f"shock fraction must be in (0, 1], got {s.fraction}")
        if self.shocks and self.mode != "endogenous":
            raise ConfigInvalid("shocks need endogenous mode (replay prices are fixed)")
        for key in ("arb_threshold", "arb_capacity", "pool_depth", "bond_agent_cash", "bond_purchase"):
            v = _fraction(getattr(self, key), key)
            if v < 0:
                raise ConfigInvalid(f"{key} must be non-negative")
        if not 0 < _fraction(self.pool_depth, "pool_depth") < 1:
            raise ConfigInvalid("pool_depth must be in (0, 1)")
        for key in ("target", "stable_supply", "share_supply", "share_price"):
            if _amount(getattr(self, key), key) <= 0:
                raise ConfigInvalid(f"{key} must be positive")
        try:
            self.curve(1)
        except (PonziError, ValueError) as exc:
            raise ConfigInvalid(f"discount curve: {exc}") from exc

    def num(self, key: str) -> Fraction:
        return _fraction(getattr(self, key), key)

    def units(self, key: str) -> int:
        return _amount(getattr(self, key), key)

    def curve(self, periods: int) -> DiscountCurve:
        if self.discount_rates:
            rates = [float(Fraction(r)) for r in self.discount_rates]
            if len(rates) < periods:
                raise ConfigInvalid(f"discount_rates lists {len(rates)} rates for {periods} periods")
            return DiscountCurve(tuple(rates[:periods]))
        return DiscountCurve.flat(float(Fraction(self.discount_rate)), periods)

    def with_overrides(self, **kw: Any) -> Scenario:
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return Scenario.from_dict(d)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["cohorts"] = [{k: v for k, v in c.items() if v is not None} for c in d["cohorts"]]
        d["shocks"] = list(d["shocks"])
        d["discount_rates"] = list(d["discount_rates"])
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Scenario:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown scenario keys: {sorted(unknown)}")
        if "protocol" not in data:
            raise ConfigInvalid("scenario needs a protocol")
        kw = dict(data)
        try:
            if "cohorts" in kw:
                kw["cohorts"] = tuple(_cohort(c) for c in kw["cohorts"])
            if "shocks" in kw:
                kw["shocks"] = tuple(s for raw in kw["shocks"] for s in _shocks(raw))
            if "discount_rates" in kw:
                kw["discount_rates"] = tuple(str(r) for r in kw["discount_rates"])
            for key in ("protocol", "mode", "name", "arb_threshold", "arb_capacity", "discount_rate",
                        "target", "stable_supply", "share_supply", "share_price", "pool_depth",
                        "bond_agent_cash", "bond_purchase"):
                if key in kw and not isinstance(kw[key], str):
                    kw[key] = str(kw[key])
            for key in ("horizon", "rebase_lag"):
                if key in kw and kw[key] is not None and (isinstance(kw[key], bool) or not isinstance(kw[key], int)):
                    raise ConfigInvalid(f"{key} must be an integer")
        except (TypeError, KeyError, AttributeError) as exc:
            raise ConfigInvalid(f"malformed scenario entry: {exc}") from exc
        return cls(**kw)


def _cohort(raw: dict[str, Any]) -> CohortSpec:
    extra = set(raw) - {"id", "join", "usd", "exit"}
    if extra:
        raise ConfigInvalid(f"unknown cohort keys: {sorted(extra)}")
    return CohortSpec(str(raw["id"]), int(raw["join"]), str(raw.get("usd", "1")), raw.get("exit"))


def _shocks(raw: dict[str, Any]) -> list[Shock]:
    extra = set(raw) - {"period", "token", "fraction", "length"}
    if extra:
        raise ConfigInvalid(f"unknown shock keys: {sorted(extra)}")
    length = int(raw.get("length", 1))
    if length < 1:
        raise ConfigInvalid("shock length must be >= 1")
    start = int(raw["period"])
    return [Shock(start + i, str(raw.get("token", "stable")), str(raw["fraction"])) for i in range(length)]


def load_scenario(path: str | Path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return Scenario.from_dict(data)
