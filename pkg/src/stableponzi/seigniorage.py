"""Seigniorage-share mechanics.

Two designs live here: a dual-coin system where the share token is minted
and burned against the stable coin at the quoted share price, and a
three-token system where below-peg cash buys discounted bonds and
above-peg expansion pays bonds first, shareholders second.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .amm import AmmPool, Side, base_reserve_at_price, quote_in_for_base_out, spot_price, swap_exact_in
from .ledger import SCALE, Amount, LedgerError, Price, mul_div_trunc

PEG: Price = SCALE


class SeigniorageError(LedgerError):
    pass


class InsufficientStable(SeigniorageError):
    pass


class InsufficientShares(SeigniorageError):
    pass


class ZeroSharePrice(SeigniorageError):
    pass


class NotBelowPeg(SeigniorageError):
    pass


class NotAbovePeg(SeigniorageError):
    pass


class InsufficientCash(SeigniorageError):
    pass


@dataclass
class DualCoinState:
    stable_supply: Amount
    share_supply: Amount
    peg: Price = PEG

    def __post_init__(self) -> None:
        if self.stable_supply < 0 or self.share_supply < 0:
            raise SeigniorageError("supplies must be non-negative")


def redeem_stable(state: DualCoinState, stable_in: Amount, share_price: Price) -> Amount:
    """Burn stable coins for their peg value in newly minted shares."""
    if share_price <= 0:
        raise ZeroSharePrice("share price must be positive")
    if stable_in < 0 or stable_in > state.stable_supply:
        raise InsufficientStable(f"cannot burn {stable_in} of {state.stable_supply} stable")
    minted = mul_div_trunc(stable_in, state.peg, share_price)
    state.stable_supply -= stable_in
    state.share_supply += minted
    return minted


def mint_stable(
    state: DualCoinState,
    usd_value: int,
    share_price: Price,
    holder_shares: Amount | None = None,
) -> Amount:
    """Burn ``usd_value`` worth of shares and mint that value in stable coins.

    ``holder_shares`` is the burner's balance; it defaults to the whole
    share supply.
    """
    if share_price <= 0:
        raise ZeroSharePrice("share price must be positive")
    if usd_value < 0:
        raise SeigniorageError("usd_value must be non-negative")
    burned = mul_div_trunc(usd_value, SCALE, share_price)
    available = state.share_supply if holder_shares is None else min(holder_shares, state.share_supply)
    if burned > available:
        raise InsufficientShares(f"need {burned} shares, burner holds {available}")
    minted = mul_div_trunc(usd_value, SCALE, state.peg)
    state.share_supply -= burned
    state.stable_supply += minted
    return minted


@dataclass(frozen=True)
class Bond:
    issue_period: int
    face: Amount


@dataclass
class BondQueue:
    entries: deque[Bond] = field(default_factory=deque)
    face_issued: int = 0
    face_redeemed: int = 0

    def push(self, bond: Bond) -> None:
        if bond.face <= 0:
            raise SeigniorageError("bond face must be positive")
        if self.entries and bond.issue_period < self.entries[-1].issue_period:
            raise SeigniorageError("bonds must be queued in issue order")
        self.entries.append(bond)
        self.face_issued += bond.face

    def redeem(self, budget: Amount) -> Amount:
        """Pay out face value oldest-first; returns the amount spent."""
        spent = 0
        while self.entries and spent < budget:
            head = self.entries[0]
            pay = min(head.face, budget - spent)
            if pay == head.face:
                self.entries.popleft()
            else:
                self.entries[0] = Bond(head.issue_period, head.face - pay)
            spent += pay
        self.face_redeemed += spent
        return spent

    @property
    def outstanding(self) -> int:
        return sum(b.face for b in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class TriTokenState:
    cash_supply: Amount
    share_supply: Amount
    bonds: BondQueue = field(default_factory=BondQueue)
    registry: dict[str, Amount] = field(default_factory=dict)
    peg: Price = PEG

    def __post_init__(self) -> None:
        if self.cash_supply < 0 or self.share_supply < 0:
            raise SeigniorageError("supplies must be non-negative")
        if not self.registry and self.share_supply:
            self.registry = {"shareholders": self.share_supply}


def issue_bond(
    state: TriTokenState,
    cash_paid: Amount,
    cash_price: Price,
    buyer_balance: Amount | None = None,
    period: int = 0,
) -> Amount:
    """Sell a bond for cash below peg; the cash is burned."""
    if cash_price >= state.peg:
        raise NotBelowPeg(f"cash price {cash_price} is not below peg {state.peg}")
    if cash_price <= 0:
        raise SeigniorageError("cash price must be positive")
    limit = state.cash_supply if buyer_balance is None else min(buyer_balance, state.cash_supply)
    if cash_paid <= 0 or cash_paid > limit:
        raise InsufficientCash(f"cannot pay {cash_paid} cash (available {limit})")
    face = mul_div_trunc(cash_paid, state.peg, cash_price)
    state.cash_supply -= cash_paid
    state.bonds.push(Bond(period, face))
    return face


@dataclass(frozen=True)
class Expansion:
    minted: Amount
    to_bonds: Amount
    to_shares: Amount
    payouts: dict[str, Amount]


def apply_expansion(state: TriTokenState, price: Price) -> Expansion:
    """Mint cash above peg; bonds are paid FIFO before any shareholder."""
    if price <= state.peg:
        raise NotAbovePeg(f"price {price} is not above peg {state.peg}")
    minted = mul_div_trunc(price - state.peg, state.cash_supply, state.peg)
    to_bonds = state.bonds.redeem(minted)
    to_shares = minted - to_bonds
    payouts: dict[str, Amount] = {}
    if to_shares and state.share_supply:
        # Truncation dust stays unassigned.
        payouts = {
            holder: mul_div_trunc(to_shares, units, state.share_supply)
            for holder, units in sorted(state.registry.items())
        }
    state.cash_supply += minted
    return Expansion(minted, to_bonds, to_shares, payouts)


@dataclass(frozen=True)
class ArbitrageTrade:
    direction: str  # "redeem", "mint" or "none"
    stable_amount: Amount = 0
    share_amount: Amount = 0
    usd_in: int = 0  # USD the arbitrageur paid into pools
    usd_out: int = 0  # USD the arbitrageur took out of pools

    @property
    def profit(self) -> int:
        return self.usd_out - self.usd_in


NO_TRADE = ArbitrageTrade("none")


def arbitrage_step(
    dual: DualCoinState,
    stable_pool: AmmPool,
    share_pool: AmmPool,
    threshold: Fraction,
    capacity: Amount,
) -> ArbitrageTrade:
    """One rule-based arbitrage pass through the mint/burn window.

    Below the band the arbitrageur buys stable in its pool, redeems it for
    shares and dumps them in the share pool; above the band it does the
    reverse through ``mint_stable``. Trade size is what it takes to pull
    the stable spot back to peg, capped at ``capacity``.
    """
    peg = dual.peg
    spot = spot_price(stable_pool)
    lower = Fraction(peg) * (1 - threshold)
    upper = Fraction(peg) * (1 + threshold)
    if capacity <= 0:
        return NO_TRADE

    if spot < lower:
        to_peg = stable_pool.reserve_base - base_reserve_at_price(stable_pool, peg)
        size = min(capacity, to_peg, dual.stable_supply)
        if size <= 0:
            return NO_TRADE
        usd_in = quote_in_for_base_out(stable_pool, size)
        bought = swap_exact_in(stable_pool, Side.SELL_QUOTE, usd_in)
        share_px = spot_price(share_pool)
        minted = redeem_stable(dual, bought, share_px)
        usd_out = swap_exact_in(share_pool, Side.SELL_BASE, minted) if minted else 0
        return ArbitrageTrade("redeem", bought, minted, usd_in, usd_out)

    if spot > upper:
        to_peg = base_reserve_at_price(stable_pool, peg) - stable_pool.reserve_base
        size = min(capacity, to_peg)
        if size <= 0:
            return NO_TRADE
        usd_value = mul_div_trunc(size, peg, SCALE)
        share_px = spot_price(share_pool)
        needed = mul_div_trunc(usd_value, SCALE, share_px)
        if needed <= 0:
            return NO_TRADE
        usd_in = quote_in_for_base_out(share_pool, needed)
        got = swap_exact_in(share_pool, Side.SELL_QUOTE, usd_in)
        minted = mint_stable(dual, usd_value, share_px, holder_shares=got)
        usd_out = swap_exact_in(stable_pool, Side.SELL_BASE, minted)
        return ArbitrageTrade("mint", minted, needed, usd_in, usd_out)

    return NO_TRADE
