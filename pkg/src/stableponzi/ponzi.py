"""Present indebtedness, investor utility and the rational Ponzi game test.

Periods are 1-based throughout: ``rates[0]`` is the rate between period 0
and period 1, ``inflows[0]`` is the net inflow received in period 1.
Money values are integers at the ledger scale; discount factors are floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Sequence

from .ledger import SCALE, Amount, Price, mul_div_trunc

if TYPE_CHECKING:
    from .record import RunRecord

DEFAULT_EPSILON = 1e-6
DEFAULT_WINDOW = 30
WORSE_OFF_TOLERANCE = 1e-6


class PonziError(ValueError):
    pass


class IndexOutOfRange(PonziError, IndexError):
    pass


class EmptyRun(PonziError):
    pass


@dataclass(frozen=True)
class DiscountCurve:
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        for j, r in enumerate(self.rates, start=1):
            if not 1.0 + r > 0.0:
                raise PonziError(f"rate r_{j}={r} gives a non-positive 1 + r")

    @classmethod
    def flat(cls, rate: float, periods: int) -> DiscountCurve:
        return cls((rate,) * periods)

    def __len__(self) -> int:
        return len(self.rates)


@dataclass(frozen=True)
class CashFlowLedger:
    inflows: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "inflows", tuple(int(i) for i in self.inflows))

    def __len__(self) -> int:
        return len(self.inflows)


def discount_factor(curve: DiscountCurve, s: int) -> float:
    """Product of (1 + r_j)^-1 for j = 1..s; 1.0 for s = 0."""
    if not 0 <= s <= len(curve):
        raise IndexOutOfRange(f"period {s} outside 0..{len(curve)}")
    g = 1.0
    for r in curve.rates[:s]:
        g /= 1.0 + r
    return g


def discount_factors(curve: DiscountCurve, periods: int | None = None) -> list[float]:
    """Discount factors for periods 0..T, built incrementally."""
    T = len(curve) if periods is None else periods
    if not 0 <= T <= len(curve):
        raise IndexOutOfRange(f"horizon {T} outside 0..{len(curve)}")
    out = [1.0]
    for r in curve.rates[:T]:
        out.append(out[-1] / (1.0 + r))
    return out


class Indebtedness(NamedTuple):
    present_value: float  # discounted to period 0, USD
    face_value: float  # D_T itself, USD
    discount: float


class _Neumaier:
    __slots__ = ("total", "comp")

    def __init__(self) -> None:
        self.total = 0.0
        self.comp = 0.0

    def add(self, x: float) -> None:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.comp += (self.total - t) + x
        else:
            self.comp += (x - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.comp


def indebtedness_series(ledger: CashFlowLedger, curve: DiscountCurve, T: int | None = None) -> list[float]:
    """Discounted net indebtedness for t = 1..T in USD, one running pass."""
    T = len(ledger) if T is None else T
    if T > len(ledger) or T > len(curve) or T < 0:
        raise IndexOutOfRange(f"horizon {T} exceeds ledger ({len(ledger)}) or curve ({len(curve)})")
    acc = _Neumaier()
    g = 1.0
    out = []
    for s in range(T):
        g /= 1.0 + curve.rates[s]
        acc.add(g * (ledger.inflows[s] / SCALE))
        out.append(acc.value)
    return out


def present_indebtedness(ledger: CashFlowLedger, curve: DiscountCurve, T: int) -> Indebtedness:
    series = indebtedness_series(ledger, curve, T)
    pv = series[-1] if series else 0.0
    g = discount_factor(curve, T)
    return Indebtedness(pv, pv / g, g)


def utility(units: Amount, price: Price) -> int:
    """Holding value Q x P at the ledger scale, truncated."""
    return mul_div_trunc(units, price, SCALE)


@dataclass(frozen=True)
class Cohort:
    id: str
    join_period: int
    invested_usd: int
    units: Amount
    exit_period: int | None = None
    exit_proceeds_usd: int | None = None

    def __post_init__(self) -> None:
        if self.exit_period is not None and self.exit_period < self.join_period:
            raise PonziError(f"cohort {self.id} exits before it joins")
        if self.units <= 0:
            raise PonziError(f"cohort {self.id} holds no units")


class CohortOutcome(NamedTuple):
    cohort_id: str
    entry_pv: float
    exit_pv: float
    worse_off: bool
    better_off: bool

    @property
    def shortfall(self) -> float:
        return self.entry_pv - self.exit_pv


def cohort_outcome(
    c: Cohort,
    curve: DiscountCurve,
    final_price: Price,
    T: int,
    tolerance: float = WORSE_OFF_TOLERANCE,
) -> CohortOutcome:
    """Compare what a cohort put in against what it got (or could get) out.

    Both legs are discounted to period 0.
    """
    if c.join_period > T:
        raise IndexOutOfRange(f"cohort {c.id} joins at {c.join_period} after horizon {T}")
    entry = discount_factor(curve, c.join_period) * c.invested_usd / SCALE
    if c.exit_period is not None and c.exit_period <= T:
        proceeds = c.exit_proceeds_usd or 0
        exit_ = discount_factor(curve, c.exit_period) * proceeds / SCALE
    else:
        exit_ = discount_factor(curve, T) * utility(c.units, final_price) / SCALE
    return CohortOutcome(
        c.id,
        entry,
        exit_,
        worse_off=exit_ < entry - tolerance,
        better_off=exit_ > entry + tolerance,
    )


class ParetoResult(NamedTuple):
    weak: bool
    strict: bool
    vacuous: bool


def pareto_check(outcomes: Sequence[CohortOutcome]) -> ParetoResult:
    weak = not any(o.worse_off for o in outcomes)
    strict = weak and any(o.better_off for o in outcomes)
    return ParetoResult(weak, strict, vacuous=len(outcomes) == 0)


@dataclass(frozen=True)
class ClassifierConfig:
    window: int = DEFAULT_WINDOW
    epsilon: float = DEFAULT_EPSILON
    tolerance: float = WORSE_OFF_TOLERANCE

    def __post_init__(self) -> None:
        if self.window < 1:
            raise PonziError("window must be at least one period")
        if self.epsilon < 0 or self.tolerance < 0:
            raise PonziError("epsilon and tolerance must be non-negative")


@dataclass(frozen=True)
class WorstCohort:
    id: str
    shortfall_usd: float


@dataclass(frozen=True)
class PonziVerdict:
    condition_i: bool
    condition_ii: bool
    rational: bool
    # discounted indebtedness per period at the ledger scale (rounded)
    gamma_d_series: tuple[int, ...]
    worst_cohort: WorstCohort | None
    weak_pareto: bool
    strict_pareto: bool
    vacuous_pareto: bool = False
    window: tuple[int, int] = (1, 1)

    def __post_init__(self) -> None:
        if self.rational and not (self.condition_i and self.condition_ii):
            raise PonziError("rational verdict without both conditions")

    def summary(self) -> dict:
        return {
            "condition_i": self.condition_i,
            "condition_ii": self.condition_ii,
            "rational": self.rational,
            "worst_cohort": None
            if self.worst_cohort is None
            else {"id": self.worst_cohort.id, "shortfall_usd": self.worst_cohort.shortfall_usd},
        }


def _last_active_period(ledger: CashFlowLedger, curve: DiscountCurve, T: int) -> int:
    # Past the last non-zero flow or rate the discounted sum is flat, so the
    # trailing window is anchored there; padding a run with idle periods
    # cannot change the verdict.
    for t in range(T, 0, -1):
        if ledger.inflows[t - 1] != 0 or curve.rates[t - 1] != 0.0:
            return t
    return T


def evaluate(
    ledger: CashFlowLedger,
    curve: DiscountCurve,
    cohorts: Sequence[Cohort],
    final_prices: Sequence[Price],
    T: int,
    config: ClassifierConfig = ClassifierConfig(),
) -> PonziVerdict:
    """Decide both conditions from raw ledger, curve and cohort positions."""
    if T < 1:
        raise EmptyRun("a verdict needs at least one period")
    series = indebtedness_series(ledger, curve, T)
    end = _last_active_period(ledger, curve, T)
    start = max(1, end - config.window + 1)
    cond_i = all(v > config.epsilon for v in series[start - 1 : end])

    outcomes = [
        cohort_outcome(c, curve, p, T, config.tolerance) for c, p in zip(cohorts, final_prices, strict=True)
    ]
    pareto = pareto_check(outcomes)
    losers = [o for o in outcomes if o.worse_off]
    worst = None
    if losers:
        o = max(losers, key=lambda o: (o.shortfall, o.cohort_id))
        worst = WorstCohort(o.cohort_id, round(o.shortfall, 9))

    return PonziVerdict(
        condition_i=cond_i,
        condition_ii=pareto.weak,
        rational=cond_i and pareto.weak,
        gamma_d_series=tuple(round(v * SCALE) for v in series),
        worst_cohort=worst,
        weak_pareto=pareto.weak,
        strict_pareto=pareto.strict,
        vacuous_pareto=pareto.vacuous,
        window=(start, end),
    )


def classify_rational_ponzi(run: RunRecord, config: ClassifierConfig = ClassifierConfig()) -> PonziVerdict:
    """Verdict for a recorded simulation or replay."""
    if run.horizon < 1:
        raise EmptyRun("run has no periods")
    positions = run.cohort_positions()
    return evaluate(
        CashFlowLedger(run.inflows),
        run.discount_curve(),
        [c for c, _ in positions],
        [p for _, p in positions],
        run.horizon,
        config,
    )
