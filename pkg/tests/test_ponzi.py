from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stableponzi.ledger import SCALE
from stableponzi.ponzi import (
    CashFlowLedger,
    ClassifierConfig,
    Cohort,
    CohortOutcome,
    DiscountCurve,
    EmptyRun,
    IndexOutOfRange,
    PonziError,
    PonziVerdict,
    classify_rational_ponzi,
    cohort_outcome,
    discount_factor,
    discount_factors,
    indebtedness_series,
    pareto_check,
    present_indebtedness,
    utility,
)
from stableponzi.record import CohortTrack, RunRecord
from stableponzi.scenario import Scenario

USD = SCALE


def test_discount_factor_zero_rate():
    curve = DiscountCurve.flat(0.0, 5)
    assert all(discount_factor(curve, s) == 1.0 for s in range(6))


def test_discount_factor_empty_product():
    assert discount_factor(DiscountCurve((0.3, 0.2)), 0) == 1.0


def test_discount_factor_ten_percent_two_periods():
    # exact oracle: (11/10)^-2 = 100/121
    expected = float(Fraction(100, 121))
    got = discount_factor(DiscountCurve.flat(0.1, 2), 2)
    assert got == pytest.approx(expected, abs=1e-9)
    assert got == pytest.approx(0.826446281, abs=1e-9)


def test_discount_factor_out_of_range():
    with pytest.raises(IndexOutOfRange):
        discount_factor(DiscountCurve.flat(0.0, 2), 3)


def test_curve_rejects_rate_at_minus_one():
    with pytest.raises(PonziError):
        DiscountCurve((0.1, -1.0))


@given(st.lists(st.floats(min_value=-0.5, max_value=1.0), min_size=1, max_size=50))
def test_discount_factor_is_multiplicative(rates):
    curve = DiscountCurve(tuple(rates))
    for s in range(len(rates)):
        assert discount_factor(curve, s + 1) == pytest.approx(discount_factor(curve, s) / (1 + rates[s]), rel=1e-12)


def test_discount_factors_match_pointwise():
    curve = DiscountCurve((0.05, -0.02, 0.1))
    assert discount_factors(curve) == pytest.approx([discount_factor(curve, s) for s in range(4)], rel=1e-15)


@pytest.mark.parametrize(
    "inflows, rate, T, expected, tol",
    [
        ([1, 1, 1], 0.0, 3, 3.0, 0),
        ([1, -1], 0.0, 2, 0.0, 0),
        # 100/1.1 - 50/1.21 as an exact rational
        ([100, -50], 0.1, 2, float(Fraction(100) / Fraction(11, 10) - Fraction(50) / Fraction(121, 100)), 1e-6),
    ],
)
def test_present_indebtedness(inflows, rate, T, expected, tol):
    ledger = CashFlowLedger(tuple(i * USD for i in inflows))
    res = present_indebtedness(ledger, DiscountCurve.flat(rate, T), T)
    assert res.present_value == pytest.approx(expected, abs=tol or 1e-12)


def test_present_indebtedness_documented_value():
    res = present_indebtedness(CashFlowLedger((100 * USD, -50 * USD)), DiscountCurve.flat(0.1, 2), 2)
    assert res.present_value == pytest.approx(49.586776, abs=1e-6)
    assert res.face_value == pytest.approx(res.present_value * 1.21, rel=1e-12)


def test_present_indebtedness_horizon_checks():
    with pytest.raises(IndexOutOfRange):
        present_indebtedness(CashFlowLedger((1,)), DiscountCurve.flat(0.0, 3), 2)


@given(st.lists(st.integers(min_value=-(10**15), max_value=10**15), min_size=1, max_size=100))
def test_zero_rate_face_value_is_cumulative_sum(flows):
    ledger = CashFlowLedger(tuple(flows))
    res = present_indebtedness(ledger, DiscountCurve.flat(0.0, len(flows)), len(flows))
    assert res.face_value == pytest.approx(sum(flows) / SCALE, rel=1e-12, abs=1e-9)


@pytest.mark.parametrize(
    "q, p, expected",
    [(2 * USD, USD // 2, USD), (0, 123 * USD, 0), (110 * USD, USD, 110 * USD)],
)
def test_utility(q, p, expected):
    assert utility(q, p) == expected


ZERO = DiscountCurve.flat(0.0, 10)


def test_cohort_break_even_not_worse():
    c = Cohort("a", 1, USD, USD)
    out = cohort_outcome(c, ZERO, USD, 5)
    assert not out.worse_off and not out.better_off


def test_cohort_ust_style_loss():
    out = cohort_outcome(Cohort("a", 1, USD, USD), ZERO, USD * 2 // 100, 5)
    assert out.exit_pv == pytest.approx(0.02)
    assert out.worse_off


def test_cohort_exit_with_gain():
    c = Cohort("a", 1, USD, USD, exit_period=3, exit_proceeds_usd=1_100_000_000)
    out = cohort_outcome(c, ZERO, 1, 5)
    assert not out.worse_off and out.better_off


def test_cohort_outcome_discounts_both_legs():
    curve = DiscountCurve.flat(0.1, 4)
    c = Cohort("a", 2, USD, USD, exit_period=4, exit_proceeds_usd=1_210_000_000)
    out = cohort_outcome(c, curve, 0, 4)
    assert out.entry_pv == pytest.approx(1 / 1.21)
    assert out.exit_pv == pytest.approx(1.21 / 1.1**4)
    assert not out.worse_off  # 1.21 at period 4 is worth exactly the period-2 dollar


def _o(cid, diff):
    return CohortOutcome(cid, 1.0, 1.0 + diff, diff < -1e-6, diff > 1e-6)


def test_pareto_all_break_even():
    r = pareto_check([_o("a", 0), _o("b", 0)])
    assert (r.weak, r.strict, r.vacuous) == (True, False, False)


def test_pareto_mixed():
    r = pareto_check([_o("a", -0.98), _o("b", 0.5)])
    assert (r.weak, r.strict) == (False, False)


def test_pareto_empty_is_vacuous():
    r = pareto_check([])
    assert (r.weak, r.strict, r.vacuous) == (True, False, True)


@given(st.lists(st.floats(min_value=-1, max_value=1), min_size=1, max_size=20), st.data())
def test_pareto_weak_monotone_under_removing_losers(diffs, data):
    outcomes = [_o(str(i), d) for i, d in enumerate(diffs)]
    losers = [o for o in outcomes if o.worse_off]
    if not losers:
        return
    drop = data.draw(st.sampled_from(losers))
    before = pareto_check(outcomes).weak
    after = pareto_check([o for o in outcomes if o is not drop]).weak
    assert not (before and not after)


def test_verdict_rational_requires_both():
    with pytest.raises(PonziError):
        PonziVerdict(True, False, True, (), None, False, False)


def make_run(inflows, prices, tracks, rate="0"):
    T = len(inflows)
    s = Scenario(protocol="rebase", mode="replay", discount_rate=rate, cohorts=())
    return RunRecord(s, T, {"inflow": list(inflows), "price.stable": list(prices)}, tracks)


def hold(cid, join, usd, units, T):
    return CohortTrack(cid, "stable", join, usd, units=[0] * (join - 1) + [units] * (T - join + 1), utility=[0] * T)


def test_classify_idealized_break_even_is_rational():
    # two cohorts buy at $1 and the price ends at $1: nobody loses, debt stays positive
    T = 40
    inflows = [USD] + [0] * 9 + [2 * USD] + [0] * (T - 11)
    run = make_run(inflows, [USD] * T, [hold("a", 1, USD, USD, T), hold("b", 11, 2 * USD, 2 * USD, T)])
    v = classify_rational_ponzi(run)
    assert v.condition_i and v.condition_ii and v.rational
    assert v.gamma_d_series[-1] == 3 * USD
    assert v.weak_pareto and not v.strict_pareto


def test_classify_zero_cash_flows():
    T = 5
    v = classify_rational_ponzi(make_run([0] * T, [USD] * T, []))
    assert v.gamma_d_series[-1] == 0
    assert not v.condition_i and not v.rational
    assert v.vacuous_pareto


def test_classify_loss_fails_condition_ii():
    T = 10
    run = make_run([USD] + [0] * (T - 1), [USD] + [USD // 50] * (T - 1), [hold("a", 1, USD, USD, T)])
    v = classify_rational_ponzi(run)
    assert v.condition_i and not v.condition_ii and not v.rational
    assert v.worst_cohort.id == "a"
    assert v.worst_cohort.shortfall_usd == pytest.approx(0.98)


def test_classify_empty_run():
    run = make_run([], [], [])
    with pytest.raises(EmptyRun):
        classify_rational_ponzi(run)


def test_condition_i_window_only_sees_trailing_periods():
    # an early negative stretch outside the window does not matter
    T = 50
    inflows = [-USD] + [0] * 4 + [3 * USD] + [USD] * (T - 6)
    run = make_run(inflows, [USD] * T, [])
    assert classify_rational_ponzi(run, ClassifierConfig(window=30)).condition_i
    assert not classify_rational_ponzi(run, ClassifierConfig(window=T)).condition_i


@given(
    st.lists(st.integers(min_value=-5 * USD, max_value=5 * USD), min_size=1, max_size=40),
    st.integers(min_value=1, max_value=60),
    st.integers(min_value=1, max_value=40),
)
def test_verdict_invariant_under_idle_padding(flows, pad, window):
    T = len(flows)
    price = USD // 2
    tracks = [hold("a", 1, USD, USD, T)]
    run = make_run(flows, [price] * T, tracks)
    padded = make_run(
        flows + [0] * pad, [price] * (T + pad), [hold("a", 1, USD, USD, T + pad)]
    )
    cfg = ClassifierConfig(window=window)
    a, b = classify_rational_ponzi(run, cfg), classify_rational_ponzi(padded, cfg)
    assert (a.condition_i, a.condition_ii, a.rational) == (b.condition_i, b.condition_ii, b.rational)


def test_series_is_running_sum():
    ledger = CashFlowLedger((USD, 2 * USD, -USD))
    assert indebtedness_series(ledger, DiscountCurve.flat(0.0, 3)) == [1.0, 3.0, 2.0]
