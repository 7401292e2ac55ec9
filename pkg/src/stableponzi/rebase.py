"""Elastic-supply (rebase) token state machine."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .ledger import SCALE, Amount, LedgerError, Price, Scalar, signed_mul_div_trunc

DEFAULT_TARGET: Price = SCALE
# Internal shares per external base unit at genesis; keeps balances fine
# grained after the supply contracts.
SHARE_RESOLUTION = 10**6
REBASE_LABEL = "02:00Z"


class RebaseError(LedgerError):
    pass


class ZeroTarget(RebaseError):
    pass


class SupplyUnderflow(RebaseError):
    pass


def supply_delta(price: Price, target: Price, total_supply: Amount, lag: int = 1) -> int:
    """(price - target) * total_supply / target, truncated toward zero.

    ``lag`` divides the adjustment; 1 applies the full deviation.
    """
    if target <= 0:
        raise ZeroTarget("rebase target must be positive")
    if price <= 0:
        raise RebaseError("rebase price must be positive")
    if lag < 1:
        raise RebaseError("lag divisor must be >= 1")
    return signed_mul_div_trunc(price - target, total_supply, target * lag)


@dataclass(frozen=True)
class RebaseState:
    token: str
    total_supply: Amount
    scalar: Scalar
    target: Price = DEFAULT_TARGET
    epoch: int = 0
    lag: int = 1

    def __post_init__(self) -> None:
        if self.total_supply <= 0:
            raise RebaseError("total supply must be positive")

    @classmethod
    def genesis(
        cls,
        token: str,
        total_supply: Amount,
        target: Price = DEFAULT_TARGET,
        lag: int = 1,
        resolution: int = SHARE_RESOLUTION,
    ) -> RebaseState:
        return cls(token, total_supply, Scalar(1, resolution), target, 0, lag)

    @property
    def total_shares(self) -> int:
        """Shares outstanding; constant across rebases."""
        return self.total_supply * self.scalar.den // self.scalar.num


def apply_rebase(state: RebaseState, oracle_price: Price) -> RebaseState:
    """Advance one epoch, scaling every balance by the same ratio."""
    delta = supply_delta(oracle_price, state.target, state.total_supply, state.lag)
    new_supply = state.total_supply + delta
    if new_supply < 1:
        raise SupplyUnderflow(f"rebase at price {oracle_price} would leave supply {new_supply}")
    if delta == 0:
        return replace(state, epoch=state.epoch + 1)
    return replace(
        state,
        total_supply=new_supply,
        scalar=state.scalar.scaled(new_supply, state.total_supply),
        epoch=state.epoch + 1,
    )
