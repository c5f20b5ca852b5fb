"""Deterministic lifecycle problem for one household type and birth cohort.

Quantities are detrended by the labor-augmenting trend. Period ``p`` of a
life has resources ``gross_p a_p - price_p a_{p+1} + R0_p`` before labor
income, where ``price_p = s_p * Z_{t+1}/Z_t`` prices next period's assets
through the annuity market and ``R0`` collects pension, transfers and
out-of-pocket health spending.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConvergenceError, CoverageError, InfeasibleHousehold, ValidationError
from .fiscal import ProgressiveTaxTable


def portfolio_return(psi, i_d, i_k):
    """Return on a portfolio holding share ``psi`` in bonds and the rest in equity."""
    psi = np.asarray(psi, dtype=float)
    if np.any((psi < 0) | (psi > 1)):
        raise ValidationError("bond share psi must lie in [0, 1]")
    r = psi * i_d + (1 - psi) * i_k
    return r if np.ndim(r) else float(r)


LEISURE_FORMS = ("frisch", "literal")
# Leisure weight that gives average working hours near one third under each form.
GAMMA_DEFAULT = {"frisch": 1e-4, "literal": 10.0}


def leisure_curvature(zeta: float, form: str = "frisch") -> float:
    """Curvature ``sigma`` of ``gamma (1 - l)^(1 - sigma) / (1 - sigma)``.

    ``"frisch"`` reads ``zeta`` as the Frisch elasticity of leisure, so
    ``sigma = 1 / zeta``; ``"literal"`` uses ``sigma = zeta``.
    """
    if form not in LEISURE_FORMS:
        raise ValidationError(f"unknown leisure form {form!r}; valid: {', '.join(LEISURE_FORMS)}")
    if not 0 < zeta < 1:
        raise ValidationError("zeta must lie in (0, 1)")
    return 1.0 / zeta if form == "frisch" else float(zeta)


@dataclass(frozen=True)
class HouseholdType:
    gender: int
    emp: int
    productivity: np.ndarray
    zeta: float
    gamma: float = None
    beta: float = 0.983
    leisure: str = "frisch"

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", GAMMA_DEFAULT.get(self.leisure, 1.0))
        e = np.asarray(self.productivity, dtype=float)
        object.__setattr__(self, "productivity", e)
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise ValidationError("productivity must be finite and non-negative")
        if not 0 < self.zeta < 1:
            raise ValidationError("zeta must lie in (0, 1)")
        if not 0 < self.beta <= 1:
            raise ValidationError("beta must lie in (0, 1]")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        leisure_curvature(self.zeta, self.leisure)

    @property
    def sigma(self) -> float:
        return leisure_curvature(self.zeta, self.leisure)

    def efficiency(self, retirement_age: int) -> np.ndarray:
        """Profile with zeros from model age ``retirement_age`` (1-based) on."""
        e = self.productivity.copy()
        e[retirement_age - 1:] = 0.0
        return e


@dataclass
class LifeProblem:
    """Arrays over the remaining periods of one life, plus the tax table."""

    omega: np.ndarray       # full-time earnings w * e
    gross: np.ndarray       # 1 + r on assets carried into the period
    price: np.ndarray       # survival * trend growth into the next period
    growth: np.ndarray      # trend growth factor into the next period
    tauc: np.ndarray
    pension: np.ndarray
    transfer: np.ndarray
    health: np.ndarray      # out-of-pocket health spending
    a0: float
    table: ProgressiveTaxTable
    gamma: float
    sigma: float            # curvature of leisure utility, not 1
    beta: float
    cohort: int = 0
    start_age: int = 0      # 0-based age index of the first period
    efficiency: np.ndarray = None  # e per period, used to aggregate effective labor

    def __post_init__(self):
        P = len(self.omega)
        for name in ("omega", "gross", "price", "growth", "tauc", "pension", "transfer", "health"):
            v = np.ascontiguousarray(getattr(self, name), dtype=float)
            if v.shape != (P,):
                raise ValidationError(f"{name} must have one entry per remaining period")
            setattr(self, name, v)
        if np.any(self.gross <= 0):
            raise ValidationError("gross asset return must be positive (1 + r > 0)")
        if np.any(self.tauc <= -1):
            raise ValidationError("consumption tax must exceed -1")
        if self.a0 < 0:
            raise ValidationError("initial assets must be non-negative")
        if self.efficiency is None:
            self.efficiency = np.ones(P)
        if self.sigma <= 0 or self.sigma == 1:
            raise ValidationError("leisure curvature must be positive and differ from 1")

    @property
    def R0(self) -> np.ndarray:
        return self.pension + self.transfer - self.health


@dataclass
class HouseholdSolution:
    c: np.ndarray
    l: np.ndarray
    y: np.ndarray
    tax: np.ndarray
    a: np.ndarray           # length P + 1, a[P] = 0
    lam: np.ndarray
    u: np.ndarray
    v: np.ndarray           # remaining discounted utility from each period
    problem: LifeProblem = field(repr=False)
    iterations: int = 0

    @property
    def discount(self) -> np.ndarray:
        """Discount weights ``beta^p S_p`` relative to the first period."""
        pr = self.problem
        s = pr.price / pr.growth
        phi = np.ones(len(s))
        phi[1:] = np.cumprod(pr.beta * s[:-1])
        return phi

    def euler_residuals(self) -> np.ndarray:
        """``|lam_p - beta (1+r_{p+1}) lam_{p+1} / growth_p|`` where ``a_{p+1} > 0``, else NaN."""
        pr = self.problem
        res = np.abs(self.lam[:-1] - pr.beta * pr.gross[1:] * self.lam[1:] / pr.growth[:-1])
        return np.where(self.a[1:-1] > 0, res, np.nan)

    def labor_residuals(self) -> np.ndarray:
        """Labor first-order condition residual where ``0 < l < 1`` off bracket kinks, else NaN."""
        pr = self.problem
        t = pr.table
        out = np.full(len(self.l), np.nan)
        for p, (l, y) in enumerate(zip(self.l, self.y)):
            if not 0 < l < 1 or np.any(np.isclose(y, t.lower, rtol=0, atol=1e-13)):
                continue
            mr = t.rate[t.bracket(y)]
            out[p] = abs(pr.gamma * (1 - l) ** (-pr.sigma)
                         - pr.omega[p] * (1 - mr) / ((1 + pr.tauc[p]) * self.c[p]))
        return out

    def budget_residuals(self) -> np.ndarray:
        """Relative budget-constraint residual per period."""
        pr = self.problem
        lhs = (1 + pr.tauc) * self.c + pr.health + pr.price * self.a[1:]
        rhs = pr.gross * self.a[:-1] + self.y - self.tax + pr.pension + pr.transfer
        return np.abs(lhs - rhs) / np.maximum(np.abs(lhs) + np.abs(rhs), 1e-300)

    def value(self) -> float:
        return float(self.v[0])


def solve_problem(pr: LifeProblem, warm=None, tol: float = 1e-11,
                  max_iter: int = 500) -> HouseholdSolution:
    """Solve one life; ``warm`` is an asset path (length P + 1) to start from."""
    P = len(pr.omega)
    a_init = np.zeros(P + 1) if warm is None else np.array(warm, dtype=float)
    t = pr.table
    a, status, it, bad = _kernels.solve_life(
        float(pr.a0), pr.gross, pr.price, pr.growth, pr.R0, pr.omega, pr.tauc,
        t.lower, t.rate, t.intercept, pr.gamma, pr.sigma, pr.beta, a_init, tol, max_iter)
    if status == 2:
        raise InfeasibleHousehold(
            f"budget infeasible for cohort {pr.cohort} at age index {pr.start_age + bad}: "
            "mandatory outlays exceed resources", cohort=pr.cohort, age=pr.start_age + bad)
    out = _kernels.life_paths(a, pr.gross, pr.price, pr.R0, pr.omega, pr.tauc,
                              t.lower, t.rate, t.intercept, pr.gamma, pr.sigma)
    sol = HouseholdSolution(c=out[0], l=out[1], y=out[2], tax=out[3], a=a, lam=out[4],
                            u=out[5], v=np.zeros(P), problem=pr, iterations=it)
    if status == 1:
        worst = np.nanmax(np.concatenate([sol.euler_residuals(), [0.0]]))
        if worst > 1e3 * tol:
            raise ConvergenceError(
                f"household solver stalled for cohort {pr.cohort}: Euler residual {worst:.3e}",
                residuals=[worst])
    phi = sol.discount
    # v_p = sum_{q >= p} phi_q u_q / phi_p
    tail = np.cumsum((phi * sol.u)[::-1])[::-1]
    sol.v = tail / phi
    return sol


@dataclass
class PriceFacing:
    """Yearly price and policy paths, indexed by offset from ``start_year``."""

    start_year: int
    w: np.ndarray
    i_d: np.ndarray
    i_k: np.ndarray
    psi: np.ndarray
    tauc: np.ndarray
    growth: np.ndarray
    transfer: np.ndarray = None

    def __post_init__(self):
        n = len(self.w)
        for name in ("w", "i_d", "i_k", "psi", "tauc", "growth"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,)).copy()
            setattr(self, name, v)
        self.transfer = (np.zeros(n) if self.transfer is None
                         else np.broadcast_to(np.asarray(self.transfer, float), (n,)).copy())

    @property
    def r(self) -> np.ndarray:
        return portfolio_return(self.psi, self.i_d, self.i_k)

    def window(self, first: int, n: int) -> dict:
        idx = np.arange(first, first + n) - self.start_year
        if idx.min() < 0 or idx.max() >= len(self.w):
            raise CoverageError(f"price paths do not cover years {first}..{first + n - 1}")
        return {k: getattr(self, k)[idx] for k in ("w", "tauc", "growth", "transfer")} | {
            "gross": 1 + self.r[idx]}


def solve_lifecycle(htype: HouseholdType, prices: PriceFacing, survival, birth_year: int,
                    table: ProgressiveTaxTable, retirement_age: int, pension=None,
                    health=None, start_age: int = 0, a0: float = 0.0,
                    warm=None, tol: float = 1e-11) -> HouseholdSolution:
    """Solve a cohort's remaining life from 0-based age index ``start_age``.

    ``survival[j]`` is the conditional survival the cohort faces at age
    index ``j``; ``pension`` and ``health`` are per-age arrays (defaults 0).
    Earnings stop from model age ``retirement_age`` on.
    """
    J = len(htype.productivity)
    P = J - start_age
    first = birth_year + start_age
    win = prices.window(first, P)
    e = htype.efficiency(retirement_age)[start_age:]
    s = np.asarray(survival, dtype=float)[start_age:]
    pension = np.zeros(J) if pension is None else np.asarray(pension, dtype=float)
    health = np.zeros(J) if health is None else np.asarray(health, dtype=float)
    pr = LifeProblem(omega=win["w"] * e, gross=win["gross"], price=s * win["growth"],
                     growth=win["growth"], tauc=win["tauc"], pension=pension[start_age:],
                     transfer=win["transfer"], health=health[start_age:], a0=a0, table=table,
                     gamma=htype.gamma, sigma=htype.sigma, beta=htype.beta,
                     cohort=birth_year, start_age=start_age, efficiency=e)
    return solve_problem(pr, warm=warm, tol=tol)


def aggregate_households(solutions: dict, pop, start_year: int):
    """Population-weighted ``C``, effective labor ``L`` and assets ``A`` per year.

    ``solutions`` maps ``(g, h, birth_year)`` to a :class:`HouseholdSolution`
    whose first period is at age index ``problem.start_age``. ``pop`` is
    ``n[t, j, g, h]`` for years ``start_year + t``. Effective labor weights
    hours by the efficiency profile.
    """
    pop = np.asarray(pop, dtype=float)
    if pop.ndim == 3:
        pop = pop[None]
    T, J = pop.shape[:2]
    C = np.zeros(T)
    L = np.zeros(T)
    A = np.zeros(T)
    for t in range(T):
        for j in range(J):
            for g in range(pop.shape[2]):
                for h in range(pop.shape[3]):
                    m = pop[t, j, g, h]
                    if m == 0:
                        continue
                    b = start_year + t - j
                    sol = solutions.get((g, h, b))
                    if sol is None or not 0 <= j - sol.problem.start_age < len(sol.c):
                        raise CoverageError(
                            f"no solution for type ({g}, {h}) born {b} at age index {j}")
                    p = j - sol.problem.start_age
                    C[t] += m * sol.c[p]
                    L[t] += m * sol.l[p] * sol.problem.efficiency[p]
                    A[t] += m * sol.a[p]
    return {"C": C, "L": L, "A": A}
