"""Period scheduler that drives one protocol through a scenario.

Each period runs five phases in order:

1. read prices (replay series or pool spot);
2. apply scheduled sell shocks (endogenous mode only);
3. run the protocol hook (rebase, or arbitrage / bond / expansion logic);
4. settle cohort joins and exits at the closing price, recording the net
   inflow for the period;
5. snapshot every cohort's units and utility.

One period is one day; the rebase hook fires at the period boundary.
Nothing here is random, so a scenario plus its input series fully
determines the resulting :class:`RunRecord`.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ._version import __version__
from .amm import AmmPool, Side, quote_in_for_base_out, spot_price, swap_exact_in
from .data import TimeSeries, format_timestamp
from .ledger import SCALE, Wallet, external_balance, mul_div_trunc, parse_amount, shares_for_units
from .ponzi import ClassifierConfig, classify_rational_ponzi, utility
from .rebase import RebaseState, apply_rebase
from .record import CohortTrack, RunRecord
from .scenario import CohortSpec, ConfigInvalid, Scenario
from .seigniorage import DualCoinState, TriTokenState, apply_expansion, arbitrage_step, issue_bond


class EngineError(RuntimeError):
    pass


class ReplayExhausted(EngineError):
    pass


def _frac_of(amount: int, f: Fraction) -> int:
    return mul_div_trunc(amount, f.numerator, f.denominator)


@dataclass
class _Holding:
    spec: CohortSpec
    track: CohortTrack
    units: int = 0  # constant-quantity protocols
    wallet: Wallet | None = None  # rebase protocol


class Engine:
    """Shared scheduling and cohort bookkeeping; subclasses supply the protocol."""

    token = "stable"

    def __init__(self, scenario: Scenario, horizon: int, data: Mapping[str, TimeSeries]) -> None:
        self.s = scenario
        self.horizon = horizon
        self.endogenous = scenario.mode == "endogenous"
        self.replay = {tok: ts.prices() for tok, ts in data.items()}
        self.replay_supply = {tok: ts.supplies() for tok, ts in data.items()}
        self.series: dict[str, list[int]] = defaultdict(list)
        self.holdings = [
            _Holding(c, CohortTrack(c.id, self.token, c.join, 0, c.exit)) for c in scenario.cohorts
        ]
        self.shocks: dict[int, list[tuple[str, Fraction]]] = defaultdict(list)
        for sh in scenario.shocks:
            self.shocks[sh.period].append((sh.token, Fraction(sh.fraction)))
        self.peg = scenario.units("target")

    # --- helpers ------------------------------------------------------
    def replay_price(self, token: str, t: int) -> int:
        prices = self.replay.get(token)
        if prices is None:
            raise ConfigInvalid(f"replay needs a {token} price series")
        if t > len(prices):
            raise ReplayExhausted(f"{token} series has {len(prices)} points, period {t} requested")
        return prices[t - 1]

    def replay_supply_at(self, token: str, t: int) -> int | None:
        supplies = self.replay_supply.get(token)
        if not supplies or t > len(supplies):
            return None
        return supplies[t - 1]

    def record(self, name: str, value: int) -> None:
        self.series[name].append(value)

    # --- protocol hooks (subclasses) -----------------------------------
    def read_prices(self, t: int) -> None:
        raise NotImplementedError

    def apply_shocks(self, t: int) -> None:
        pass

    def protocol_hook(self, t: int) -> None:
        raise NotImplementedError

    def closing_price(self) -> int:
        raise NotImplementedError

    def record_state(self, t: int) -> None:
        raise NotImplementedError

    def buy(self, h: _Holding, usd: int, price: int) -> None:
        h.units = mul_div_trunc(usd, SCALE, price)

    def sell_all(self, h: _Holding) -> int:
        units, h.units = h.units, 0
        return units

    def units_of(self, h: _Holding) -> int:
        return h.units

    # --- schedule -----------------------------------------------------
    def settle_cohorts(self, t: int, price: int) -> int:
        inflow = 0
        for h in self.holdings:
            c = h.spec
            if c.join == t:
                if price <= 0:
                    raise EngineError(f"cohort {c.id} cannot buy at a zero price in period {t}")
                usd = parse_amount(c.usd)
                self.buy(h, usd, price)
                h.track.invested_usd = usd
                inflow += usd
            if c.exit == t and c.join <= t:
                units = self.sell_all(h)
                proceeds = utility(units, price)
                h.track.exit_units = units
                h.track.exit_proceeds_usd = proceeds
                inflow -= proceeds
        return inflow

    def step(self, t: int) -> dict[str, int]:
        if not 1 <= t <= self.horizon:
            raise EngineError(f"period {t} outside 1..{self.horizon}")
        self.read_prices(t)
        if self.endogenous:
            self.apply_shocks(t)
        self.protocol_hook(t)
        price = self.closing_price()
        inflow = self.settle_cohorts(t, price)
        self.record_state(t)
        self.record("inflow", inflow)
        for h in self.holdings:
            units = self.units_of(h)
            h.track.units.append(units)
            h.track.utility.append(utility(units, price))
        return {name: values[-1] for name, values in self.series.items()}


class RebaseEngine(Engine):
    def __init__(self, scenario: Scenario, horizon: int, data: Mapping[str, TimeSeries]) -> None:
        super().__init__(scenario, horizon, data)
        supply = self.replay_supply_at("stable", 1) if scenario.mode != "endogenous" else None
        supply = supply or scenario.units("stable_supply")
        self.state = RebaseState.genesis("stable", supply, self.peg, scenario.rebase_lag)
        self.float = Wallet("market")
        self.float.credit("stable", self.state.total_shares)
        for h in self.holdings:
            h.wallet = Wallet(h.spec.id)
        self.pool: AmmPool | None = None
        self.pool_wallet: Wallet | None = None
        if self.endogenous:
            depth = _frac_of(supply, scenario.num("pool_depth"))
            self.pool_wallet = Wallet("pool")
            self._move(self.float, self.pool_wallet, depth)
            self.pool = AmmPool(external_balance(self.pool_wallet, "stable", self.state.scalar), depth * self.peg // SCALE)
        # constant market cap for the idealized reading
        self.market_cap = mul_div_trunc(supply, self.peg, SCALE)
        self.oracle = 0

    def _move(self, src: Wallet, dst: Wallet, units: int) -> None:
        shares = shares_for_units(units, self.state.scalar)
        src.debit("stable", shares)
        dst.credit("stable", shares)

    def _sync_pool(self) -> None:
        assert self.pool is not None and self.pool_wallet is not None
        self.pool.reserve_base = external_balance(self.pool_wallet, "stable", self.state.scalar)

    def read_prices(self, t: int) -> None:
        if self.endogenous:
            self.oracle = spot_price(self.pool)
        else:
            self.oracle = self.replay_price("stable", t)

    def apply_shocks(self, t: int) -> None:
        for token, f in self.shocks.get(t, ()):
            if token != "stable":
                continue
            before = self.pool.reserve_base
            self._move(self.float, self.pool_wallet, _frac_of(self.state.total_supply, f))
            after = external_balance(self.pool_wallet, "stable", self.state.scalar)
            self.pool.reserve_base = before
            if after > before:
                swap_exact_in(self.pool, Side.SELL_BASE, after - before)
        self.oracle = spot_price(self.pool)

    def protocol_hook(self, t: int) -> None:
        self.state = apply_rebase(self.state, self.oracle)
        if self.endogenous:
            self._sync_pool()

    def closing_price(self) -> int:
        if self.endogenous:
            return spot_price(self.pool)
        if self.s.mode == "idealized-rebase":
            return self.market_cap * SCALE // self.state.total_supply
        return self.oracle

    def record_state(self, t: int) -> None:
        self.record("price.stable", self.closing_price())
        self.record("oracle.stable", self.oracle)
        self.record("supply.stable", self.state.total_supply)

    def buy(self, h: _Holding, usd: int, price: int) -> None:
        units = mul_div_trunc(usd, SCALE, price)
        available = external_balance(self.float, "stable", self.state.scalar)
        if units > available:
            raise EngineError(f"cohort {h.spec.id} wants {units} units, only {available} float")
        self._move(self.float, h.wallet, units)

    def sell_all(self, h: _Holding) -> int:
        units = self.units_of(h)
        shares = h.wallet.shares("stable")
        h.wallet.debit("stable", shares)
        self.float.credit("stable", shares)
        return units

    def units_of(self, h: _Holding) -> int:
        return external_balance(h.wallet, "stable", self.state.scalar)


class DualEngine(Engine):
    def __init__(self, scenario: Scenario, horizon: int, data: Mapping[str, TimeSeries]) -> None:
        super().__init__(scenario, horizon, data)
        stable = scenario.units("stable_supply")
        share = scenario.units("share_supply")
        if not self.endogenous:
            stable = self.replay_supply_at("stable", 1) or stable
            share = self.replay_supply_at("share", 1) or share
        self.state = DualCoinState(stable, share, self.peg)
        self.threshold = scenario.num("arb_threshold")
        self.capacity = scenario.num("arb_capacity")
        self.prices = {"stable": 0, "share": 0}
        if self.endogenous:
            depth = scenario.num("pool_depth")
            sb = _frac_of(stable, depth)
            hb = _frac_of(share, depth)
            self.pools = {
                "stable": AmmPool(sb, mul_div_trunc(sb, self.peg, SCALE)),
                "share": AmmPool(hb, mul_div_trunc(hb, scenario.units("share_price"), SCALE)),
            }

    def read_prices(self, t: int) -> None:
        if self.endogenous:
            self.prices = {tok: spot_price(p) for tok, p in self.pools.items()}
            return
        self.prices["stable"] = self.replay_price("stable", t)
        self.prices["share"] = self.replay_price("share", t) if "share" in self.replay else 0
        for tok, attr in (("stable", "stable_supply"), ("share", "share_supply")):
            supply = self.replay_supply_at(tok, t)
            if supply is not None:
                setattr(self.state, attr, supply)

    def apply_shocks(self, t: int) -> None:
        for token, f in self.shocks.get(t, ()):
            supply = self.state.stable_supply if token == "stable" else self.state.share_supply
            amount = _frac_of(supply, f)
            if amount > 0:
                swap_exact_in(self.pools[token], Side.SELL_BASE, amount)

    def protocol_hook(self, t: int) -> None:
        usd_in = usd_out = 0
        if self.endogenous:
            cap = _frac_of(self.state.stable_supply, self.capacity)
            trade = arbitrage_step(self.state, self.pools["stable"], self.pools["share"], self.threshold, cap)
            usd_in, usd_out = trade.usd_in, trade.usd_out
            self.prices = {tok: spot_price(p) for tok, p in self.pools.items()}
        self.record("arb.usd_in", usd_in)
        self.record("arb.usd_out", usd_out)

    def closing_price(self) -> int:
        return self.prices["stable"]

    def record_state(self, t: int) -> None:
        self.record("price.stable", self.prices["stable"])
        if self.endogenous or "share" in self.replay:
            self.record("price.share", self.prices["share"])
        self.record("supply.stable", self.state.stable_supply)
        self.record("supply.share", self.state.share_supply)


class TriTokenEngine(Engine):
    def __init__(self, scenario: Scenario, horizon: int, data: Mapping[str, TimeSeries]) -> None:
        super().__init__(scenario, horizon, data)
        cash = scenario.units("stable_supply")
        share = scenario.units("share_supply")
        if not self.endogenous:
            cash = self.replay_supply_at("stable", 1) or cash
            share = self.replay_supply_at("share", 1) or share
        self.state = TriTokenState(cash, share, peg=self.peg)
        self.agent_cash = _frac_of(cash, scenario.num("bond_agent_cash"))
        self.bid = scenario.num("bond_purchase")
        self.prices = {"stable": 0, "share": 0}
        if self.endogenous:
            depth = scenario.num("pool_depth")
            cb = _frac_of(cash, depth)
            hb = _frac_of(share, depth)
            self.pools = {
                "stable": AmmPool(cb, mul_div_trunc(cb, self.peg, SCALE)),
                "share": AmmPool(hb, mul_div_trunc(hb, scenario.units("share_price"), SCALE)),
            }

    def read_prices(self, t: int) -> None:
        if self.endogenous:
            self.prices = {tok: spot_price(p) for tok, p in self.pools.items()}
        else:
            self.prices["stable"] = self.replay_price("stable", t)
            self.prices["share"] = self.replay_price("share", t) if "share" in self.replay else 0

    def apply_shocks(self, t: int) -> None:
        for token, f in self.shocks.get(t, ()):
            supply = self.state.cash_supply if token == "stable" else self.state.share_supply
            amount = _frac_of(supply, f)
            if amount > 0:
                swap_exact_in(self.pools[token], Side.SELL_BASE, amount)
        self.prices = {tok: spot_price(p) for tok, p in self.pools.items()}

    def protocol_hook(self, t: int) -> None:
        price = self.prices["stable"]
        issued = minted = to_bonds = to_shares = 0
        if 0 < price < self.peg:
            bid = min(_frac_of(self.state.cash_supply, self.bid), self.state.cash_supply)
            if self.endogenous and bid > 0:
                pool = self.pools["stable"]
                bid = min(bid, pool.reserve_base - 1)
                if bid > 0:
                    swap_exact_in(pool, Side.SELL_QUOTE, quote_in_for_base_out(pool, bid))
                    issued = issue_bond(self.state, bid, price, period=t)
            elif not self.endogenous:
                bid = min(bid, self.agent_cash)
                if bid > 0:
                    issued = issue_bond(self.state, bid, price, self.agent_cash, period=t)
                    self.agent_cash -= bid
        elif price > self.peg:
            exp = apply_expansion(self.state, price)
            minted, to_bonds, to_shares = exp.minted, exp.to_bonds, exp.to_shares
            if self.endogenous:
                # recipients take profit into the cash pool
                paid = to_bonds + sum(exp.payouts.values())
                if paid > 0:
                    swap_exact_in(self.pools["stable"], Side.SELL_BASE, paid)
            else:
                self.agent_cash += to_bonds
        if self.endogenous:
            self.prices = {tok: spot_price(p) for tok, p in self.pools.items()}
        self.record("bonds.issued", issued)
        self.record("expansion.minted", minted)
        self.record("expansion.to_bonds", to_bonds)
        self.record("expansion.to_shares", to_shares)

    def closing_price(self) -> int:
        return self.prices["stable"]

    def record_state(self, t: int) -> None:
        self.record("price.stable", self.prices["stable"])
        if self.endogenous or "share" in self.replay:
            self.record("price.share", self.prices["share"])
        self.record("supply.stable", self.state.cash_supply)
        self.record("supply.share", self.state.share_supply)
        self.record("bonds.outstanding", self.state.bonds.outstanding)


ENGINES = {"rebase": RebaseEngine, "dual": DualEngine, "tritoken": TriTokenEngine}


def engine_step(engine: Engine, period: int) -> dict[str, int]:
    """Advance ``engine`` through ``period`` and return that period's values."""
    return engine.step(period)


def _notes(data: Mapping[str, TimeSeries]) -> list[str]:
    notes = []
    for tok in sorted(data):
        ts = data[tok]
        notes += [f"{tok}: forward-filled {format_timestamp(d)}" for d in ts.filled]
        notes += [f"{tok}: zero price {format_timestamp(d)}" for d in ts.zero_prices]
    return notes


def run_scenario(
    s: Scenario,
    data: Mapping[str, TimeSeries] | None = None,
    config: ClassifierConfig = ClassifierConfig(),
) -> RunRecord:
    data = dict(data or {})
    if s.mode == "endogenous":
        if s.horizon is None:
            raise ConfigInvalid("endogenous runs need a horizon")
        horizon = s.horizon
    else:
        if "stable" not in data:
            raise ConfigInvalid(f"{s.mode} mode needs a stable price series")
        horizon = s.horizon if s.horizon is not None else len(data["stable"])
    if horizon < 1:
        raise ConfigInvalid("horizon must be >= 1")
    for tok, ts in data.items():
        if s.mode != "endogenous" and len(ts) < horizon:
            raise ReplayExhausted(f"{tok} series covers {len(ts)} periods, horizon is {horizon}")

    engine = ENGINES[s.protocol](s, horizon, data)
    for t in range(1, horizon + 1):
        engine_step(engine, t)

    run = RunRecord(
        scenario=s,
        horizon=horizon,
        series=dict(engine.series),
        cohorts=[h.track for h in engine.holdings],
        engine_version=__version__,
        notes=_notes(data),
    )
    run.verdict = classify_rational_ponzi(run, config)
    return run
