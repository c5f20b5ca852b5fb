import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from olgreform.errors import UnknownScenario, ValidationError
from olgreform.policy import (REFORMS, SCENARIOS, PolicySettings, build_scenario, canonical_reform,
                              cohort_retirement_age)

YEARS = np.arange(2015, 2115)


def idx(year):
    return year - YEARS[0]


def test_baseline_holds_current_policy():
    sc = build_scenario("baseline", "none", YEARS)
    assert np.all(sc.retirement_age == 46)
    assert np.all(sc.kappa == 0.62)
    np.testing.assert_allclose(sc.copay_medical, np.tile(PolicySettings().copay_medical, (100, 1)))
    np.testing.assert_allclose(sc.copay_ltc, 0.1)


def test_retirement_extension_from_2030():
    sc = build_scenario("retire_ext", "none", YEARS)
    assert sc.retirement_age[idx(2029)] == 46
    assert sc.retirement_age[idx(2030)] == 51
    assert np.all(sc.retirement_age[idx(2030):] == 51)


def test_replacement_rate_path():
    sc = build_scenario("baseline", "rr50", YEARS)
    assert sc.kappa[idx(2015)] == pytest.approx(0.62)
    assert sc.kappa[idx(2047)] == pytest.approx(0.508)
    assert np.all(sc.kappa[idx(2047):] == pytest.approx(0.508))
    mid = 0.62 + (2031 - 2015) / 32 * (0.508 - 0.62)
    assert sc.kappa[idx(2031)] == pytest.approx(mid)
    assert np.all(np.diff(sc.kappa) <= 0)


def test_copay_reforms_bite_from_2030():
    base = build_scenario("baseline", "none", YEARS)
    med = build_scenario("baseline", "med30", YEARS)
    ltc = build_scenario("baseline", "ltc30", YEARS)
    np.testing.assert_array_equal(med.copay_medical[:idx(2030)], base.copay_medical[:idx(2030)])
    assert np.all(med.copay_medical[idx(2030):] == 0.3)
    np.testing.assert_array_equal(ltc.copay_ltc[:idx(2030)], base.copay_ltc[:idx(2030)])
    assert np.all(ltc.copay_ltc[idx(2030):] == 0.3)
    np.testing.assert_array_equal(med.copay_ltc, base.copay_ltc)
    np.testing.assert_array_equal(ltc.copay_medical, base.copay_medical)


@pytest.mark.parametrize("scenario", SCENARIOS)
@pytest.mark.parametrize("reform", REFORMS)
def test_schedules_are_bounded(scenario, reform):
    sc = build_scenario(scenario, reform, YEARS)
    assert np.all((sc.kappa >= 0.508 - 1e-12) & (sc.kappa <= 0.62 + 1e-12))
    for c in (sc.copay_medical, sc.copay_ltc):
        assert np.all((c >= 0.1 - 1e-12) & (c <= 0.3 + 1e-12))


def test_aliases_map_to_canonical_reforms():
    assert canonical_reform("med10") == "med30"
    assert canonical_reform("ltc10") == "ltc30"
    a = build_scenario("baseline", "ltc10", YEARS)
    b = build_scenario("baseline", "ltc30", YEARS)
    np.testing.assert_array_equal(a.copay_ltc, b.copay_ltc)


def test_unknown_ids_list_valid_choices():
    with pytest.raises(UnknownScenario, match="rr50"):
        build_scenario("baseline", "rr40", YEARS)
    with pytest.raises(UnknownScenario, match="retire_ext"):
        build_scenario("early", "none", YEARS)


def test_settings_validation():
    with pytest.raises(ValidationError):
        PolicySettings(kappa=1.5)
    with pytest.raises(ValidationError):
        PolicySettings(retirement_age=52)
    with pytest.raises(ValidationError):
        PolicySettings(kappa_end_year=2015)


def test_cohort_retirement_age_examples():
    assert cohort_retirement_age(np.full(80, 46), 0) == 46
    # a cohort aged 45 when the extension starts keeps working to 51
    JR = np.r_[np.full(45, 46), np.full(35, 51)]
    assert cohort_retirement_age(JR, 0) == 51
    # a cohort already retired stays retired
    JR = np.r_[np.full(47, 46), np.full(33, 51)]
    assert cohort_retirement_age(JR, 0) == 46


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 60), st.integers(0, 60), st.integers(0, 10))
def test_cohort_retirement_age_between_old_and_new(base, switch, extra):
    new = min(base + extra, 80)
    JR = np.r_[np.full(switch, base), np.full(80 - switch, new)][:80]
    age = cohort_retirement_age(JR, 0)
    assert base <= age <= new
