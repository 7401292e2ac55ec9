"""Algorithmic-stablecoin simulator and rational Ponzi game evaluator."""

from ._version import __version__
from .amm import AmmPool, spot_price, swap_exact_in
from .data import load_csv, read_report, write_report
from .engine import engine_step, run_scenario
from .ledger import SCALE, format_amount, mul_div_trunc, parse_amount
from .ponzi import (
    CashFlowLedger,
    ClassifierConfig,
    Cohort,
    DiscountCurve,
    PonziVerdict,
    classify_rational_ponzi,
    discount_factor,
    present_indebtedness,
    utility,
)
from .rebase import RebaseState, apply_rebase, supply_delta
from .scenario import Scenario, load_scenario

__all__ = [
    "AmmPool",
    "CashFlowLedger",
    "ClassifierConfig",
    "Cohort",
    "DiscountCurve",
    "PonziVerdict",
    "RebaseState",
    "SCALE",
    "Scenario",
    "__version__",
    "apply_rebase",
    "classify_rational_ponzi",
    "discount_factor",
    "engine_step",
    "format_amount",
    "load_csv",
    "load_scenario",
    "mul_div_trunc",
    "parse_amount",
    "present_indebtedness",
    "read_report",
    "run_scenario",
    "spot_price",
    "supply_delta",
    "swap_exact_in",
    "utility",
    "write_report",
]
