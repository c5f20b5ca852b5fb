"""Welfare comparisons between runs and the output-growth decomposition.

Welfare changes are consumption-equivalent variations: the uniform
percent scaling of a cohort's baseline remaining-lifetime consumption that
gives the reform's remaining-lifetime value, holding labor fixed. With log
consumption utility this is ``exp(dV / sum(phi)) - 1`` where ``phi`` are the
discount-survival weights over the remaining life.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demographics import ENTRY_AGE, N_AGES
from .errors import DomainError

TYPES = (("male", "regular"), ("male", "contingent"),
         ("female", "regular"), ("female", "contingent"))
GROUPS = ("Total", "Retire", "Worker", "Future")
RETIRE_AGE = 65
COMPONENTS = ("tech", "tangible_1", "tangible_2", "intangible_1", "intangible_2",
              "labor_1", "labor_2", "population")


def cev(value_a, value_b, weight):
    """Consumption-equivalent change (fraction) from value ``a`` to value ``b``."""
    weight = np.asarray(weight, dtype=float)
    if np.any(weight <= 0):
        raise DomainError("discount weights must be positive")
    return np.expm1((np.asarray(value_b) - np.asarray(value_a)) / weight)


def _cohort_slot(path, entry):
    book = getattr(path, "book", None)
    if book is None:
        raise DomainError(f"run {path.label!r} carries no cohort values")
    i = entry - int(book.entry[0])
    if not 0 <= i < book.entry.size or int(book.entry[i]) != entry:
        raise DomainError(f"cohort entering at offset {entry} is absent from run {path.label!r}")
    return i


def cohort_welfare_change(baseline, reform, entry: int, g: int, h: int) -> float:
    """Percent CEV of the reform for the cohort with entry offset ``entry`` and type ``(g, h)``.

    ``entry`` counts years from the start year to the cohort's first model
    age, so cohorts alive at the start have ``entry <= 0``.
    """
    ia, ib = _cohort_slot(baseline, entry), _cohort_slot(reform, entry)
    if baseline.book.start[ia] != reform.book.start[ib]:
        raise DomainError("runs disagree on the cohort's first modelled age")
    a, b = baseline.book, reform.book
    return 100.0 * float(cev(a.value[ia, g, h], b.value[ib, g, h], a.weight[ia, g, h]))


def reported_entries(path, base_year: int = None, report_end: int = None) -> np.ndarray:
    """Entry offsets of cohorts alive in the base year or entering up to the report end."""
    base_year = path.base_year if base_year is None else base_year
    report_end = path.report_end if report_end is None else report_end
    b = base_year - int(path.years[0])
    lo = b - (N_AGES - 1)
    hi = report_end - int(path.years[0])
    return np.arange(lo, hi + 1)


def group_of(entry: int, base_offset: int) -> str:
    """Generation group by model age in the base year."""
    age = ENTRY_AGE + base_offset - entry
    if entry > base_offset:
        return "Future"
    return "Retire" if age >= RETIRE_AGE else "Worker"


@dataclass(frozen=True)
class WelfareTable:
    """Percent CEV by type and group, population-weighted and unweighted.

    ``weighted[k, m]`` is type ``TYPES[k]`` and group ``GROUPS[m]``;
    ``cohorts`` holds the per-cohort changes ``[cohort, g, h]`` for
    ``entries``.
    """

    scenario: str
    reform: str
    weighted: np.ndarray
    unweighted: np.ndarray
    entries: np.ndarray
    birth_years: np.ndarray
    cohorts: np.ndarray
    mass: np.ndarray

    def cell(self, group: str, g: int, h: int, weighted: bool = True) -> float:
        table = self.weighted if weighted else self.unweighted
        return float(table[2 * g + h, GROUPS.index(group)])

    def rows(self):
        """welfare.csv rows, population-weighted first, then simple means."""
        for weighting, table in (("weighted", self.weighted), ("simple", self.unweighted)):
            for k, (gname, hname) in enumerate(TYPES):
                for m, group in enumerate(GROUPS):
                    yield (self.reform, self.scenario, f"{gname}_{hname}", group, weighting,
                           table[k, m])

    def cohort_rows(self):
        for i, year in enumerate(self.birth_years):
            for k, (gname, hname) in enumerate(TYPES):
                yield (int(year), f"{gname}_{hname}", self.cohorts[i, k // 2, k % 2])


def cohort_mass(path, entries, base_year: int = None) -> np.ndarray:
    """Weights ``[cohort, g, h]``: base-year mass for living cohorts, entry mass for future ones."""
    base_year = path.base_year if base_year is None else base_year
    b = base_year - int(path.years[0])
    n = path.n
    mass = np.zeros((len(entries), 2, 2))
    for i, e in enumerate(entries):
        if e <= b:
            mass[i] = n[b, b - e]
        else:
            mass[i] = n[e, 0]
    return mass


def welfare_table(baseline, reform, scenario: str = "", reform_id: str = "",
                  base_year: int = None, report_end: int = None) -> WelfareTable:
    """Group summaries of cohort CEVs between two runs of the same economy."""
    base_year = baseline.base_year if base_year is None else base_year
    entries = reported_entries(baseline, base_year, report_end)
    b = base_year - int(baseline.years[0])
    changes = np.array([[[cohort_welfare_change(baseline, reform, int(e), g, h)
                          for h in range(2)] for g in range(2)] for e in entries])
    mass = cohort_mass(baseline, entries, base_year)
    groups = np.array([group_of(int(e), b) for e in entries])
    weighted = np.zeros((4, len(GROUPS)))
    unweighted = np.zeros((4, len(GROUPS)))
    for k in range(4):
        g, h = divmod(k, 2)
        for m, group in enumerate(GROUPS):
            sel = np.ones(len(entries), bool) if group == "Total" else groups == group
            v, wgt = changes[sel, g, h], mass[sel, g, h]
            weighted[k, m] = np.sum(v * wgt) / np.sum(wgt)
            unweighted[k, m] = np.mean(v)
    birth = int(baseline.years[0]) + entries - ENTRY_AGE
    return WelfareTable(scenario=scenario, reform=reform_id, weighted=weighted,
                        unweighted=unweighted, entries=entries, birth_years=birth,
                        cohorts=changes, mass=mass)


@dataclass(frozen=True)
class GrowthDecomposition:
    """Yearly log-growth of final output and its additive contributions.

    ``parts[t, k]`` is component ``COMPONENTS[k]`` for the change from year
    ``years[t] - 1`` to ``years[t]``.
    """

    years: np.ndarray
    total: np.ndarray
    parts: np.ndarray

    def residual(self) -> np.ndarray:
        return self.total - self.parts.sum(axis=1)

    def component(self, name: str) -> np.ndarray:
        return self.parts[:, COMPONENTS.index(name)]

    def rows(self):
        for t, year in enumerate(self.years):
            yield (int(year), "total", self.total[t])
            for k, name in enumerate(COMPONENTS):
                yield (int(year), name, self.parts[t, k])


def growth_decomposition(path, tech) -> GrowthDecomposition:
    """Split ``dlog Y`` into technology, per-capita factor and population terms.

    With ``Y = Y1^eta1 Y2^(1-eta1)`` and Cobb-Douglas sectors the log change
    is linear in the log changes of ``A``, ``Omega``, the four capital
    stocks and the two labor inputs, so the split is exact. Factor terms
    are per head of population; technology is ``(1 - Theta) dlog Z``.
    """
    Z = np.asarray(path.Z, dtype=float)
    N = np.asarray(path.pop, dtype=float)
    eta = tech.eta
    thT, thI = np.array(tech.theta_T), np.array(tech.theta_I)
    dl = lambda x: np.diff(np.log(x), axis=0)
    K = np.asarray(path.K) * Z[:, None] / N[:, None]      # per-capita levels, order 1T 1I 2T 2I
    Lpc = np.asarray(path.L_sector) / N[:, None]
    parts = np.column_stack([
        (1 - tech.capital_share) * dl(Z),
        eta[0] * thT[0] * dl(K[:, 0]), eta[1] * thT[1] * dl(K[:, 2]),
        eta[0] * thI[0] * dl(K[:, 1]), eta[1] * thI[1] * dl(K[:, 3]),
        eta[0] * (1 - thT[0] - thI[0]) * dl(Lpc[:, 0]),
        eta[1] * (1 - thT[1] - thI[1]) * dl(Lpc[:, 1]),
        dl(N),
    ])
    total = dl(np.asarray(path.Y) * Z)
    return GrowthDecomposition(years=np.asarray(path.years)[1:], total=total, parts=parts)
