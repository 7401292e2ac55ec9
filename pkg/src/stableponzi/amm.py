"""Zero-fee constant-product pool quoting a token against USD."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import isqrt

from .ledger import SCALE, Amount, Price


class PoolError(ValueError):
    pass


class EmptyPool(PoolError):
    pass


class ExcessiveOutput(PoolError):
    pass


class Side(str, Enum):
    SELL_BASE = "sell_base"
    SELL_QUOTE = "sell_quote"


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class AmmPool:
    reserve_base: Amount
    reserve_quote: Amount

    def __post_init__(self) -> None:
        if self.reserve_base <= 0 or self.reserve_quote <= 0:
            raise EmptyPool(f"pool reserves must be positive: {self.reserve_base}/{self.reserve_quote}")

    @property
    def k(self) -> int:
        return self.reserve_base * self.reserve_quote


def spot_price(pool: AmmPool) -> Price:
    if pool.reserve_base <= 0 or pool.reserve_quote <= 0:
        raise EmptyPool("empty pool has no price")
    return pool.reserve_quote * SCALE // pool.reserve_base


def swap_exact_in(pool: AmmPool, side: Side | str, amount_in: Amount) -> Amount:
    side = Side(side)
    if amount_in <= 0:
        raise PoolError("amount_in must be positive")
    if pool.reserve_base <= 0 or pool.reserve_quote <= 0:
        raise EmptyPool("cannot swap against an empty pool")
    k = pool.k
    if side is Side.SELL_BASE:
        r_in, r_out = pool.reserve_base, pool.reserve_quote
    else:
        r_in, r_out = pool.reserve_quote, pool.reserve_base
    new_in = r_in + amount_in
    # Rounding the kept reserve up keeps the product from shrinking.
    new_out = _ceil_div(k, new_in)
    out = r_out - new_out
    if out >= r_out or new_out <= 0:
        raise ExcessiveOutput("swap would drain the pool")
    if side is Side.SELL_BASE:
        pool.reserve_base, pool.reserve_quote = new_in, new_out
    else:
        pool.reserve_quote, pool.reserve_base = new_in, new_out
    return out


def quote_in_for_base_out(pool: AmmPool, base_out: Amount) -> Amount:
    """Smallest USD input that buys at least ``base_out`` tokens."""
    if base_out <= 0:
        raise PoolError("base_out must be positive")
    if base_out >= pool.reserve_base:
        raise ExcessiveOutput("cannot buy the whole base reserve")
    q = _ceil_div(pool.k, pool.reserve_base - base_out) - pool.reserve_quote
    # ceil in swap_exact_in can shave a unit; step up until the quote fills
    while _base_out_for_quote(pool, q) < base_out:
        q += 1
    return q


def _base_out_for_quote(pool: AmmPool, quote_in: int) -> int:
    return pool.reserve_base - _ceil_div(pool.k, pool.reserve_quote + quote_in)


def base_reserve_at_price(pool: AmmPool, price: Price) -> int:
    """Base reserve at which the pool would quote ``price`` (same k)."""
    return isqrt(pool.k * SCALE // price)
