import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from olgreform.errors import ClosureError, ValidationError
from olgreform.fiscal import (DebtRule, GovernmentFlows, ProgressiveTaxTable, accumulate_earnings,
                              aggregate_health, aggregate_pension, bracket_tax, consumption_tax_closure,
                              copay_schedule, government_debt_step, labor_tax, pension_benefit)

TABLE = ProgressiveTaxTable.default()


def test_table_has_fourteen_consistent_rows():
    assert TABLE.lower.size == 14
    assert np.max(np.abs(TABLE.consistency_residuals())) <= 5e-4


def test_tax_first_two_brackets():
    assert labor_tax(0.05, TABLE) == pytest.approx(0.00135, abs=1e-12)
    assert labor_tax(0.15, TABLE) == pytest.approx(0.012250, abs=1e-12)
    assert labor_tax(0.0, TABLE) == 0.0


def test_boundary_evaluated_by_both_rows():
    assert bracket_tax(0.10, 0, TABLE) == pytest.approx(0.0027, abs=1e-12)
    assert bracket_tax(0.10, 1, TABLE) == pytest.approx(0.0027, abs=1e-12)


def test_continuity_at_every_boundary():
    for i in range(1, 14):
        b = TABLE.lower[i]
        assert abs(bracket_tax(b, i - 1, TABLE) - bracket_tax(b, i, TABLE)) <= 1e-9
        assert abs(bracket_tax(b, i - 1, TABLE, published=True)
                   - bracket_tax(b, i, TABLE, published=True)) <= 5e-4


def test_tax_rejects_bad_income():
    with pytest.raises(ValidationError):
        labor_tax(np.nan, TABLE)
    with pytest.raises(ValidationError):
        labor_tax(-1.0, TABLE)


def test_table_validation():
    with pytest.raises(ValidationError):
        ProgressiveTaxTable([0.0, 0.1, 0.1], [0.1] * 3, [0.0] * 3, [0.0] * 3)
    with pytest.raises(ValidationError):
        ProgressiveTaxTable([0.1], [0.1], [0.0], [0.0])


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 40.0), st.floats(1e-6, 40.0))
def test_average_rate_non_decreasing(y1, y2):
    lo, hi = sorted((y1, y2))
    assert labor_tax(lo, TABLE) / lo <= labor_tax(hi, TABLE) / hi + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.5, 3.0))
def test_scaled_schedule_is_homogeneous(y, scale):
    assert labor_tax(y * scale, TABLE, scale) == pytest.approx(scale * labor_tax(y, TABLE), rel=1e-12, abs=1e-15)


def test_accumulate_earnings_examples():
    assert accumulate_earnings(0.3, 1.0, 0.5, 0.2, 10, 46) == pytest.approx(0.4)
    assert accumulate_earnings(0.3, 1.0, 0.5, 0.2, 46, 46) == 0.3
    W = 0.0
    for age in range(1, 46):
        W = accumulate_earnings(W, 0.5, 0.4, 2.0, age, 46)
    assert W == pytest.approx(45 * 0.4)


def test_pension_examples():
    assert pension_benefit(4.5, 0.0, 46) == 0.0
    assert pension_benefit(4.5, 0.62, 46) == pytest.approx(0.062)
    with pytest.raises(ValidationError):
        pension_benefit(1.0, 0.5, 1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0.0, 1.0), st.integers(2, 60))
def test_pension_of_constant_earnings_is_kappa_times_earnings(y, kappa, JR):
    W = 0.0
    for age in range(1, JR + 10):
        W = accumulate_earnings(W, y, 1.0, 1.0, age, JR)
    assert pension_benefit(W, kappa, JR) == pytest.approx(kappa * y, rel=1e-12)


def test_aggregate_pension_examples():
    assert aggregate_pension([1.0, 2.0], [0.1, 0.1], [False, False]) == 0.0
    assert aggregate_pension([1.0, 2.0], [0.0, 0.1], [False, True]) == pytest.approx(0.2)
    mass = np.array([0.5, 1.5, 2.0])
    assert aggregate_pension(mass, 0.07, True) == pytest.approx(0.07 * mass.sum())


def test_aggregate_health_examples():
    assert aggregate_health([1.0, 2.0], [1.0, 2.0], [0.5, 1.0], 1.0, 1.0) == 0.0
    assert aggregate_health([1.0, 2.0], [1.0, 2.0], [0.5, 1.0], 0.0, 0.0) == pytest.approx(7.5)
    assert aggregate_health([1.0], [1.0], [0.0], 0.7, 0.1) == pytest.approx(0.3)


def test_debt_step_examples():
    assert government_debt_step(1.0, 0.01, GovernmentFlows(), 0.0) == pytest.approx(1.01)
    f = GovernmentFlows(G=0.2, pension=0.1, labor_tax=0.31)
    assert government_debt_step(1.0, 0.01, f, 0.0) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=9, max_size=9), st.floats(0.0, 0.05))
def test_debt_step_matches_term_by_term_sum(v, i_d):
    B, G, P, M, Tw, C, tp, td, tauc = v
    f = GovernmentFlows(G=G, pension=P, health=M, labor_tax=Tw, consumption=C, profit_tax=tp,
                        dividend_tax=td)
    terms = [B, i_d * B, G, P, M, -Tw, -tauc * C, -tp, -td]
    assert government_debt_step(B, i_d, f, tauc) == pytest.approx(sum(terms), abs=1e-12)


def test_closure_examples():
    f = GovernmentFlows(G=0.3, labor_tax=0.3, consumption=0.5)
    assert consumption_tax_closure(1.0, 1.0, 0.0, f) == 0.0
    f = GovernmentFlows(G=0.35, labor_tax=0.3, consumption=0.5)
    assert consumption_tax_closure(1.0, 1.0, 0.0, f) == pytest.approx(0.1)


def test_closure_errors_and_negative_rates():
    with pytest.raises(ClosureError):
        consumption_tax_closure(1.0, 1.0, 0.0, GovernmentFlows(consumption=0.0))
    f = GovernmentFlows(G=0.1, labor_tax=0.3, consumption=0.5)
    assert consumption_tax_closure(1.0, 1.0, 0.0, f) < 0
    with pytest.raises(ClosureError):
        consumption_tax_closure(1.0, 1.0, 0.0, f, allow_negative=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=8, max_size=8), st.floats(0.1, 2.0),
       st.floats(0.0, 0.05))
def test_closure_reproduces_target_debt(v, C, i_d):
    B, B_next, G, P, M, Tw, tp, td = v
    f = GovernmentFlows(G=G, pension=P, health=M, labor_tax=Tw, consumption=C, profit_tax=tp,
                        dividend_tax=td)
    tau = consumption_tax_closure(B, B_next, i_d, f)
    assert government_debt_step(B, i_d, f, tau) == pytest.approx(B_next, rel=1e-10, abs=1e-12)


def test_debt_rule_validation():
    DebtRule()
    with pytest.raises(ValidationError):
        DebtRule(debt_to_gdp=0.0)
    with pytest.raises(ValidationError):
        DebtRule(gov_consumption_share=1.0)


def test_copay_schedule_validation():
    m, l = copay_schedule([20, 21], 0.3, [0.1, 0.2])
    np.testing.assert_allclose(m, [0.3, 0.3])
    with pytest.raises(ValidationError):
        copay_schedule([20], 1.5, 0.1)
