"""Per-period trace of one run."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ponzi import Cohort, DiscountCurve, PonziVerdict
from .scenario import Scenario


@dataclass
class CohortTrack:
    id: str
    token: str
    join_period: int
    invested_usd: int
    exit_period: int | None = None
    exit_proceeds_usd: int | None = None
    # one entry per period; zero before joining, zero units after exit
    units: list[int] = field(default_factory=list)
    utility: list[int] = field(default_factory=list)
    exit_units: int | None = None

    def position(self, horizon: int) -> Cohort:
        exited = self.exit_period is not None and self.exit_period <= horizon
        units = self.exit_units if exited else self.units[horizon - 1]
        return Cohort(
            self.id,
            self.join_period,
            self.invested_usd,
            units or 0,
            self.exit_period if exited else None,
            self.exit_proceeds_usd if exited else None,
        )


@dataclass
class RunRecord:
    scenario: Scenario
    horizon: int
    series: dict[str, list[int]]
    cohorts: list[CohortTrack]
    verdict: PonziVerdict | None = None
    engine_version: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def inflows(self) -> list[int]:
        return self.series["inflow"]

    def discount_curve(self) -> DiscountCurve:
        return self.scenario.curve(self.horizon)

    def cohort_positions(self) -> list[tuple[Cohort, int]]:
        """Joined cohorts with the last price of the token they hold."""
        out = []
        for c in self.cohorts:
            if c.join_period > self.horizon:
                continue
            out.append((c.position(self.horizon), self.series[f"price.{c.token}"][-1]))
        return out

    def cohort(self, cohort_id: str) -> CohortTrack:
        for c in self.cohorts:
            if c.id == cohort_id:
                return c
        raise KeyError(cohort_id)
