"""Fixed-point quantities and share-based wallet balances.

Every token amount and USD value in the simulator is an integer count of
10^-9 base units. Rebase tokens store balances as internal shares; the
external balance is ``shares * scalar`` truncated, so a rebase only
swaps the scalar and is exactly pro rata.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import gcd

DECIMALS = 9
SCALE = 10**DECIMALS

# 10^15 tokens of 10^9 units each; Python ints are unbounded, this is the
# documented supported range rather than a hard limit.
MAX_SUPPLY_UNITS = 10**24

Amount = int
Price = int

_DECIMAL_RE = re.compile(r"^(-)?(\d+)(?:\.(\d+))?$")


class LedgerError(ValueError):
    pass


class NegativeAmount(LedgerError):
    pass


class TooManyDecimals(LedgerError):
    pass


class Malformed(LedgerError):
    pass


def _parse(text: str, *, signed: bool) -> int:
    if not isinstance(text, str):
        raise Malformed(f"expected a decimal string, got {type(text).__name__}")
    m = _DECIMAL_RE.match(text.strip())
    if m is None:
        raise Malformed(f"not a decimal number: {text!r}")
    neg, whole, frac = m.groups()
    if neg and not signed:
        raise NegativeAmount(f"negative amount: {text!r}")
    frac = frac or ""
    if len(frac) > DECIMALS:
        raise TooManyDecimals(f"more than {DECIMALS} fractional digits: {text!r}")
    units = int(whole) * SCALE + int(frac.ljust(DECIMALS, "0"))
    return -units if neg else units


def parse_amount(text: str) -> Amount:
    """Parse a non-negative decimal string into base units.

    >>> parse_amount("1.5")
    1500000000
    """
    return _parse(text, signed=False)


def parse_signed(text: str) -> int:
    """Like :func:`parse_amount` but accepts a leading minus sign."""
    return _parse(text, signed=True)


def format_amount(units: int) -> str:
    """Format base units as the shortest exact decimal string.

    Trailing fractional zeros are dropped, and so is the point when the
    fraction is empty: ``1_500_000_000 -> "1.5"``, ``2 * SCALE -> "2"``.
    Negative values (cash flows, indebtedness) get a leading ``-``.
    """
    sign = "-" if units < 0 else ""
    whole, frac = divmod(abs(units), SCALE)
    if frac == 0:
        return f"{sign}{whole}"
    digits = str(frac).rjust(DECIMALS, "0").rstrip("0")
    return f"{sign}{whole}.{digits}"


def mul_div_trunc(a: int, num: int, den: int) -> int:
    """floor(a * num / den) for non-negative operands, exact."""
    if den == 0:
        raise ZeroDivisionError("mul_div_trunc: zero denominator")
    if a < 0 or num < 0 or den < 0:
        raise NegativeAmount("mul_div_trunc takes unsigned operands")
    return a * num // den


def signed_mul_div_trunc(a: int, num: int, den: int) -> int:
    """a * num / den truncated toward zero; operands may be negative."""
    if den == 0:
        raise ZeroDivisionError("signed_mul_div_trunc: zero denominator")
    neg = (a < 0) ^ (num < 0) ^ (den < 0)
    q = mul_div_trunc(abs(a), abs(num), abs(den))
    return -q if neg else q


@dataclass(frozen=True)
class Scalar:
    num: int
    den: int

    def __post_init__(self) -> None:
        if self.den <= 0 or self.num <= 0:
            raise LedgerError(f"scalar must be positive, got {self.num}/{self.den}")

    def scaled(self, num: int, den: int) -> Scalar:
        """Return ``self * num / den`` in lowest terms."""
        n, d = self.num * num, self.den * den
        g = gcd(n, d)
        return Scalar(n // g, d // g)

    def to_float(self) -> float:
        return self.num / self.den


IDENTITY = Scalar(1, 1)


@dataclass
class Wallet:
    id: str
    holdings: dict[str, int] = field(default_factory=dict)

    def shares(self, token: str) -> int:
        return self.holdings.get(token, 0)

    def credit(self, token: str, shares: int) -> None:
        if shares < 0:
            raise NegativeAmount("credit takes a non-negative share count")
        self.holdings[token] = self.shares(token) + shares

    def debit(self, token: str, shares: int) -> None:
        have = self.shares(token)
        if shares < 0:
            raise NegativeAmount("debit takes a non-negative share count")
        if shares > have:
            raise NegativeAmount(f"wallet {self.id} holds {have} shares of {token}, cannot debit {shares}")
        self.holdings[token] = have - shares


def external_balance(w: Wallet, token: str, s: Scalar) -> Amount:
    return mul_div_trunc(w.shares(token), s.num, s.den)


def shares_for_units(units: Amount, s: Scalar) -> int:
    """Shares whose external value is at most ``units`` (truncated)."""
    return mul_div_trunc(units, s.den, s.num)
