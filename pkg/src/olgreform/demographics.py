"""Survival schedules, cohort-component projection and dependency ratios.

Arrays use 0-based age indices: index ``j`` is calendar age ``20 + j`` and
model age ``j + 1``. Gender index 0 is male, 1 female; employment index 0
is regular, 1 contingent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, ValidationError

ENTRY_AGE = 20
N_AGES = 100
GENDERS = ("male", "female")
EMP_TYPES = ("regular", "contingent")
LONG_RUN_GROWTH = -0.01


def age_index(age):
    return np.asarray(age) - ENTRY_AGE


@dataclass(frozen=True)
class SurvivalSchedule:
    """Conditional one-year survival ``s[t, j, g]`` for ``years[t]``."""

    years: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        s = np.asarray(self.s, dtype=float)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "s", s)
        if s.ndim != 3 or s.shape[0] != years.size or s.shape[2] != len(GENDERS):
            raise SchemaError(
                f"survival array shape {s.shape} does not match {years.size} years x ages x 2 genders")
        if np.any(np.diff(years) != 1):
            raise SchemaError("survival years must be consecutive")
        if np.any(~np.isfinite(s)) or np.any((s < 0) | (s > 1)):
            raise ValidationError("survival probabilities must lie in [0, 1]")
        if np.any(s[:, -1, :] != 0):
            raise ValidationError("survival at the maximum age must be 0")

    @property
    def n_ages(self) -> int:
        return self.s.shape[1]

    def at(self, years) -> np.ndarray:
        """Schedules for arbitrary years, frozen outside the data range."""
        idx = np.clip(np.asarray(years) - self.years[0], 0, self.years.size - 1)
        return self.s[idx]


@dataclass(frozen=True)
class CohortGrowthPath:
    years: np.ndarray
    rate: np.ndarray
    long_run: float = LONG_RUN_GROWTH

    def __post_init__(self):
        object.__setattr__(self, "years", np.asarray(self.years, dtype=int))
        object.__setattr__(self, "rate", np.asarray(self.rate, dtype=float))
        if self.years.size != self.rate.size:
            raise SchemaError("cohort growth years and rates differ in length")
        if not np.all(np.isfinite(self.rate)):
            raise ValidationError("cohort growth rates must be finite")

    def at(self, years) -> np.ndarray:
        years = np.asarray(years)
        idx = years - self.years[0]
        inside = (idx >= 0) & (idx < self.years.size)
        out = np.full(years.shape, self.long_run, dtype=float)
        out[inside] = self.rate[idx[inside]]
        before = idx < 0
        if np.any(before):
            out[before] = self.rate[0]
        return out


def unconditional_survival(s: SurvivalSchedule) -> np.ndarray:
    """``S[t, j, g]``: product of conditional survival along the cohort diagonal.

    Years before the first schedule reuse the first year's rates.
    """
    T, J, G = s.s.shape
    S = np.empty_like(s.s)
    for t in range(T):
        # the cohort aged j in year t was aged k in year t - (j - k)
        for j in range(J):
            k = np.arange(j + 1)
            yrs = np.clip(t - (j - k), 0, T - 1)
            S[t, j] = np.prod(s.s[yrs, k], axis=0)
    return S


def cohort_survival_path(s: SurvivalSchedule, birth_year: int, start_age_idx: int = 0) -> np.ndarray:
    """Conditional survival faced by one cohort from ``start_age_idx`` to the last age."""
    J = s.n_ages
    j = np.arange(start_age_idx, J)
    return s.at(birth_year + j)[np.arange(j.size), j]


def split_by_type(mass_by_age_gender, shares, mode: str = "gender") -> np.ndarray:
    """Split ``mass[j, g]`` into ``n[j, g, h]``.

    ``mode="gender"`` keeps each gender's observed mass and applies the
    within-gender employment shares. ``mode="joint"`` rescales every age so
    that type masses are proportional to the joint shares.
    """
    mass = np.asarray(mass_by_age_gender, dtype=float)
    shares = np.asarray(shares, dtype=float)
    if np.any(mass < 0):
        raise ValidationError("population mass must be non-negative")
    if mode == "gender":
        within = shares / shares.sum(axis=1, keepdims=True)
        return mass[:, :, None] * within[None]
    if mode == "joint":
        total = mass.sum(axis=1)
        return total[:, None, None] * (shares / shares.sum())[None]
    raise ValidationError(f"unknown normalization mode {mode!r}; use 'gender' or 'joint'")


def _check_shares(shares):
    shares = np.asarray(shares, dtype=float)
    if shares.shape != (len(GENDERS), len(EMP_TYPES)):
        raise SchemaError("type shares must be a 2x2 (gender x employment) table")
    if np.any(shares < 0) or abs(shares.sum() - 1.0) > 1e-9:
        raise ValidationError("type shares must be non-negative and sum to 1")
    return shares


def project_population(initial, s: SurvivalSchedule, growth: CohortGrowthPath, shares,
                       horizon: int, start_year: int) -> np.ndarray:
    """Cohort-component projection ``n[t, j, g, h]`` for ``horizon + 1`` years.

    Survivors age one year; the entry cohort total grows at the cohort growth
    rate and is split across types by ``shares``.
    """
    if horizon < 1:
        raise ValidationError("projection horizon must be at least one year")
    n0 = np.asarray(initial, dtype=float)
    if np.any(n0 < 0):
        raise ValidationError("initial population mass must be non-negative")
    shares = _check_shares(shares)
    J = s.n_ages
    if n0.shape != (J, len(GENDERS), len(EMP_TYPES)):
        raise SchemaError(f"initial population shape {n0.shape} != ({J}, 2, 2)")
    years = start_year + np.arange(horizon + 1)
    surv = s.at(years)
    g = growth.at(years)
    n = np.zeros((horizon + 1, J, 2, 2))
    n[0] = n0
    entrants = n0[0].sum()
    for t in range(horizon):
        n[t + 1, 1:] = n[t, :-1] * surv[t, :-1, :, None]
        entrants = entrants * (1 + g[t])
        n[t + 1, 0] = entrants * shares
    return n


def stationary_population(s_age_gender, growth: float, shares) -> np.ndarray:
    """Stationary age structure per unit entry cohort: ``n[j] = S[j-1] / (1+g)^j``."""
    shares = _check_shares(shares)
    s = np.asarray(s_age_gender, dtype=float)
    J = s.shape[0]
    surv_to = np.ones((J, 2))
    surv_to[1:] = np.cumprod(s[:-1], axis=0)
    disc = (1 + growth) ** -np.arange(J)
    return (surv_to * disc[:, None])[:, :, None] * shares[None]


def dependency_ratio(pop, old_age: int = 65):
    """Mass aged ``old_age``+ over mass aged 20 to ``old_age - 1``, per year.

    Returns ``(ratio, degenerate)`` where ``degenerate`` flags years with no
    working-age mass (their ratio is NaN).
    """
    pop = np.asarray(pop, dtype=float)
    if pop.ndim == 3:
        pop = pop[None]
    by_age = pop.reshape(pop.shape[0], pop.shape[1], -1).sum(axis=2)
    cut = old_age - ENTRY_AGE
    old = by_age[:, cut:].sum(axis=1)
    young = by_age[:, :cut].sum(axis=1)
    degenerate = young <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(degenerate, np.nan, old / np.where(degenerate, 1.0, young))
    return ratio, degenerate
