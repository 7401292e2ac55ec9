from fractions import Fraction
from math import ceil

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stableponzi.amm import (
    AmmPool,
    EmptyPool,
    PoolError,
    Side,
    base_reserve_at_price,
    quote_in_for_base_out,
    spot_price,
    swap_exact_in,
)
from stableponzi.ledger import SCALE

U = SCALE


@pytest.mark.parametrize(
    "base, quote, expected",
    [(1000 * U, 1000 * U, U), (100 * U, 95 * U, 950_000_000), (10**6 * U, U, 1_000)],
)
def test_spot_price(base, quote, expected):
    assert spot_price(AmmPool(base, quote)) == expected


def test_swap_sell_base():
    pool = AmmPool(1000 * U, 1000 * U)
    out = swap_exact_in(pool, Side.SELL_BASE, 100 * U)
    # oracle: reserve_quote - ceil(k / (reserve_base + in))
    expected = 1000 * U - ceil(Fraction(10**6 * U * U, 1100 * U))
    assert out == expected == 90_909_090_909
    assert pool.reserve_base == 1100 * U


def test_swap_rejects_zero():
    with pytest.raises(PoolError):
        swap_exact_in(AmmPool(U, U), Side.SELL_BASE, 0)


def test_empty_pool_rejected():
    with pytest.raises(EmptyPool):
        AmmPool(0, U)


reserves = st.integers(min_value=10**6, max_value=10**22)


@given(reserves, reserves, st.integers(min_value=1, max_value=10**22), st.sampled_from(list(Side)))
def test_k_never_decreases(b, q, amount, side):
    pool = AmmPool(b, q)
    k0 = pool.k
    try:
        swap_exact_in(pool, side, amount)
    except PoolError:
        return
    assert pool.k >= k0


@given(reserves, reserves, st.integers(min_value=1, max_value=10**21))
def test_round_trip_never_profits(b, q, amount):
    pool = AmmPool(b, q)
    try:
        got = swap_exact_in(pool, Side.SELL_QUOTE, amount)
        back = swap_exact_in(pool, Side.SELL_BASE, got)
    except PoolError:
        return
    assert back <= amount


@given(reserves, reserves, st.integers(min_value=1, max_value=10**20))
def test_quote_in_for_base_out_is_minimal(b, q, want):
    pool = AmmPool(b, q)
    if want >= b:
        return
    cost = quote_in_for_base_out(pool, want)
    probe = AmmPool(b, q)
    assert swap_exact_in(probe, Side.SELL_QUOTE, cost) >= want
    if cost > 1:
        probe = AmmPool(b, q)
        assert swap_exact_in(probe, Side.SELL_QUOTE, cost - 1) < want


def test_base_reserve_at_price():
    pool = AmmPool(100 * U, 95 * U)
    r = base_reserve_at_price(pool, U)
    assert abs(Fraction(pool.k, r * r) - 1) < Fraction(1, 10**9)
