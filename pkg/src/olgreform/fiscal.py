"""Tax, pension and health-insurance rules plus the government budget.

Income is measured in model units (1 unit = 10 million yen of 2015 labor
income). Bracket thresholds are indexed to the technology trend, so the
schedule is applied to ``y / scale`` and rescaled.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ClosureError, ValidationError

# Bracket lower bounds (model units) and effective marginal rates for labor
# earnings, with the published intercepts and cumulative taxes.
DEFAULT_LOWER = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.5, 2.0, 2.5)
DEFAULT_RATE = (0.027, 0.191, 0.272, 0.285, 0.294, 0.302, 0.306, 0.315, 0.324,
                0.328, 0.338, 0.358, 0.387, 0.447)
DEFAULT_ALPHA = (0.0, -0.0164, -0.0326, -0.0365, -0.0401, -0.0441, -0.0465,
                 -0.0528, -0.0600, -0.0636, -0.0736, -0.1036, -0.1616, -0.3116)
DEFAULT_BETA = (0.0, 0.0027, 0.0218, 0.049, 0.0775, 0.1069, 0.1371, 0.1677,
                0.1992, 0.2316, 0.2644, 0.4334, 0.6124, 0.8059)


@dataclass(frozen=True)
class ProgressiveTaxTable:
    """Piecewise-linear labor tax ``T(y) = alpha_i + rate_i * y`` on bracket i.

    ``alpha`` and ``beta`` are the values as published (rounded). The
    schedule actually applied uses intercepts rebuilt from the rates and
    bounds so that the tax is exactly continuous.
    """

    lower: np.ndarray
    rate: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("lower", "rate", "alpha", "beta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.lower.size
        if not (self.rate.size == self.alpha.size == self.beta.size == n) or n == 0:
            raise ValidationError("tax table columns must have equal, nonzero length")
        if self.lower[0] != 0.0 or np.any(np.diff(self.lower) <= 0):
            raise ValidationError("tax bracket lower bounds must start at 0 and increase strictly")
        if np.any((self.rate < 0) | (self.rate >= 1)):
            raise ValidationError("marginal tax rates must lie in [0, 1)")

    @classmethod
    def default(cls) -> "ProgressiveTaxTable":
        return cls(np.array(DEFAULT_LOWER), np.array(DEFAULT_RATE),
                   np.array(DEFAULT_ALPHA), np.array(DEFAULT_BETA))

    @property
    def cumulative(self) -> np.ndarray:
        """Tax due at each bracket's lower bound, accumulated from the rates."""
        widths = np.diff(self.lower)
        return np.concatenate([[0.0], np.cumsum(self.rate[:-1] * widths)])

    @property
    def intercept(self) -> np.ndarray:
        """Continuous intercepts ``beta_i - rate_i * lower_i``."""
        return self.cumulative - self.rate * self.lower

    def consistency_residuals(self) -> np.ndarray:
        """``alpha_i + rate_i * lower_i - beta_i`` on the published columns."""
        return self.alpha + self.rate * self.lower - self.beta

    def bracket(self, y) -> np.ndarray:
        return np.searchsorted(self.lower, np.asarray(y, dtype=float), side="right") - 1

    def marginal_rate(self, y, scale=1.0) -> np.ndarray:
        x = np.asarray(y, dtype=float) / scale
        return self.rate[np.clip(self.bracket(x), 0, None)]


def labor_tax(y, table: ProgressiveTaxTable, scale=1.0, published: bool = False):
    """Tax due on labor income ``y``; brackets are scaled by ``scale``.

    ``published=True`` uses the rounded intercepts as printed instead of the
    exactly continuous reconstruction.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValidationError("labor income must be finite")
    if np.any(y < 0):
        raise ValidationError("labor income must be non-negative")
    x = y / scale
    i = table.bracket(x)
    icpt = table.alpha if published else table.intercept
    tax = scale * (icpt[i] + table.rate[i] * x)
    return tax if tax.ndim else float(tax)


def bracket_tax(y, i: int, table: ProgressiveTaxTable, published: bool = False) -> float:
    """Evaluate row ``i``'s linear formula at ``y`` regardless of bracket."""
    icpt = table.alpha if published else table.intercept
    return float(icpt[i] + table.rate[i] * y)


def accumulate_earnings(W, wage, labor, productivity, age, retirement_age):
    """Accumulated earnings after one more year at ``age`` (1-based model age)."""
    for v in (W, wage, labor, productivity):
        if np.any(np.asarray(v) < 0):
            raise ValidationError("earnings inputs must be non-negative")
    working = np.asarray(age) < np.asarray(retirement_age)
    return np.where(working, np.asarray(wage) * labor * productivity + W, W) * 1.0


def pension_benefit(W, replacement_rate, retirement_age):
    """Per-period benefit: replacement rate times average pre-retirement earnings."""
    retirement_age = np.asarray(retirement_age)
    if np.any(retirement_age < 2):
        raise ValidationError("retirement age must be at least 2 to average earnings")
    if np.any(np.asarray(W) < 0):
        raise ValidationError("accumulated earnings must be non-negative")
    out = np.asarray(replacement_rate) * np.asarray(W) / (retirement_age - 1)
    return out if np.ndim(out) else float(out)


def aggregate_pension(mass, benefits, retired) -> float:
    """Total pension outlay over cohorts flagged as retired."""
    mass, benefits, retired = np.broadcast_arrays(mass, benefits, retired)
    return float(np.sum(np.where(retired, mass * benefits, 0.0)))


def aggregate_health(mass, medical, ltc, copay_medical, copay_ltc) -> float:
    """Insurer-covered share of medical and long-term-care costs."""
    medical, ltc = np.asarray(medical, dtype=float), np.asarray(ltc, dtype=float)
    covered = (1 - np.asarray(copay_medical)) * medical + (1 - np.asarray(copay_ltc)) * ltc
    return float(np.sum(np.asarray(mass) * covered))


@dataclass(frozen=True)
class DebtRule:
    debt_to_gdp: float = 1.5
    gov_consumption_share: float = 0.19
    bond_rate: float = 0.01

    def __post_init__(self):
        if self.debt_to_gdp <= 0:
            raise ValidationError("debt/GDP target must be positive")
        if not 0 < self.gov_consumption_share < 1:
            raise ValidationError("government consumption share must lie in (0, 1)")


@dataclass
class GovernmentFlows:
    """One period's government flows; all in the same (detrended) units."""

    G: float = 0.0
    pension: float = 0.0
    health: float = 0.0
    labor_tax: float = 0.0
    consumption: float = 0.0
    profit_tax: float = 0.0
    dividend_tax: float = 0.0


def government_debt_step(B, bond_rate, flows: GovernmentFlows, consumption_tax) -> float:
    """Next-period debt implied by this period's deficit."""
    return (B + bond_rate * B + flows.G + flows.pension + flows.health
            - flows.labor_tax - consumption_tax * flows.consumption
            - flows.profit_tax - flows.dividend_tax)


def consumption_tax_closure(B, B_next, bond_rate, flows: GovernmentFlows,
                            allow_negative: bool = True) -> float:
    """Consumption-tax rate that moves debt from ``B`` to ``B_next``.

    A negative rate is returned as is; with ``allow_negative=False`` it
    raises so infeasible closures surface instead of being clamped.
    """
    if flows.consumption <= 0:
        raise ClosureError("aggregate consumption is zero; consumption tax cannot close the budget")
    gap = (B + bond_rate * B + flows.G + flows.pension + flows.health
           - flows.labor_tax - flows.profit_tax - flows.dividend_tax - B_next)
    tau = gap / flows.consumption
    if tau < 0 and not allow_negative:
        raise ClosureError(f"implied consumption tax is negative ({tau:.6g})")
    return tau


def copay_schedule(ages: Sequence[int], medical_rate, ltc_rate) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast per-age copayment rates, validating the [0, 1] range."""
    m = np.broadcast_to(np.asarray(medical_rate, dtype=float), (len(ages),)).copy()
    l = np.broadcast_to(np.asarray(ltc_rate, dtype=float), (len(ages),)).copy()
    if np.any((m < 0) | (m > 1)) or np.any((l < 0) | (l > 1)):
        raise ValidationError("copayment rates must lie in [0, 1]")
    return m, l
