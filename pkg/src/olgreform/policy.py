"""Policy scenarios: retirement-age path crossed with one social-security reform."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demographics import ENTRY_AGE, N_AGES
from .errors import UnknownScenario, ValidationError

SCENARIOS = ("baseline", "retire_ext")
REFORMS = ("none", "rr50", "med30", "ltc30")
REFORM_ALIASES = {"med10": "med30", "ltc10": "ltc30"}


def _default_medical_copay():
    ages = ENTRY_AGE + np.arange(N_AGES)
    return np.where(ages < 70, 0.3, np.where(ages < 75, 0.2, 0.1))


@dataclass(frozen=True)
class PolicySettings:
    """Status-quo values and reform parameters (years are calendar years)."""

    kappa: float = 0.62
    kappa_target: float = 0.508
    kappa_start_year: int = 2015
    kappa_end_year: int = 2047
    retirement_age: int = 46
    extended_retirement_age: int = 51
    retirement_year: int = 2030
    copay_year: int = 2030
    medical_target: float = 0.30
    ltc_target: float = 0.30
    copay_medical: np.ndarray = field(default_factory=_default_medical_copay)
    copay_ltc: np.ndarray = field(default_factory=lambda: np.full(N_AGES, 0.1))

    def __post_init__(self):
        for name in ("kappa", "kappa_target", "medical_target", "ltc_target"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValidationError(f"{name} must lie in [0, 1]")
        for name in ("copay_medical", "copay_ltc"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v)
            if np.any((v < 0) | (v > 1)):
                raise ValidationError(f"{name} must lie in [0, 1]")
        if not 2 <= self.retirement_age <= self.extended_retirement_age <= N_AGES:
            raise ValidationError("retirement ages must satisfy 2 <= base <= extended <= J")
        if self.kappa_end_year <= self.kappa_start_year:
            raise ValidationError("replacement-rate path must end after it starts")


@dataclass(frozen=True)
class Scenario:
    """Yearly policy schedules for ``years``; copays are ``[t, j]`` by age index."""

    name: str
    reform: str
    years: np.ndarray
    retirement_age: np.ndarray
    kappa: np.ndarray
    copay_medical: np.ndarray
    copay_ltc: np.ndarray
    reform_year: int

    @property
    def label(self) -> str:
        return f"{self.name}:{self.reform}"

    def at(self, year):
        """Index into the schedules, holding the end values outside the range."""
        return np.clip(np.asarray(year) - self.years[0], 0, self.years.size - 1)


def canonical_reform(reform: str) -> str:
    r = REFORM_ALIASES.get(reform, reform)
    if r not in REFORMS:
        valid = ", ".join(REFORMS + tuple(REFORM_ALIASES))
        raise UnknownScenario(f"unknown reform {reform!r}; valid reforms: {valid}")
    return r


def build_scenario(scenario: str, reform: str, years,
                   settings: PolicySettings = PolicySettings()) -> Scenario:
    """Full schedules for one (scenario, reform) pair over ``years``.

    Reforms are known from the first year on but bite only from their
    stated year. The replacement-rate cut is linear in calendar time.
    """
    if scenario not in SCENARIOS:
        raise UnknownScenario(
            f"unknown scenario {scenario!r}; valid scenarios: {', '.join(SCENARIOS)}")
    reform = canonical_reform(reform)
    years = np.asarray(years, dtype=int)
    st = settings
    n = years.size
    JR = np.full(n, st.retirement_age, dtype=int)
    if scenario == "retire_ext":
        JR[years >= st.retirement_year] = st.extended_retirement_age
    kappa = np.full(n, st.kappa)
    med = np.tile(st.copay_medical, (n, 1))
    ltc = np.tile(st.copay_ltc, (n, 1))
    reform_year = st.copay_year
    if reform == "rr50":
        w = np.clip((years - st.kappa_start_year) / (st.kappa_end_year - st.kappa_start_year), 0, 1)
        kappa = st.kappa + w * (st.kappa_target - st.kappa)
        reform_year = st.kappa_start_year
    elif reform == "med30":
        med[years >= st.copay_year] = st.medical_target
    elif reform == "ltc30":
        ltc[years >= st.copay_year] = st.ltc_target
    return Scenario(name=scenario, reform=reform, years=years, retirement_age=JR, kappa=kappa,
                    copay_medical=med, copay_ltc=ltc, reform_year=reform_year)


def cohort_retirement_age(JR_by_year, birth_index: int) -> int:
    """First model age ``j`` with ``j >= J^R`` in force that year; retirement is permanent.

    ``JR_by_year[k]`` is the age in force in year ``birth_index + k`` (year
    of entry at ``k = 0``).
    """
    JR = np.asarray(JR_by_year)
    for k in range(JR.size):
        if k + 1 >= JR[k]:
            return k + 1
    return JR.size + 1
