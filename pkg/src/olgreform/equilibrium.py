"""Initial steady state, terminal balanced growth path and the transition between them.

All aggregates are detrended by the labor-augmenting trend ``Z`` (``Z = 1``
in the start year) and measured in units of the data population mass.
Years are indexed by ``t``, the offset from the start year; age index ``j``
is age ``20 + j``; a cohort is labelled by its entry offset ``e`` (the
year it is aged 20), so it is aged ``j = t - e`` in year ``t``.

One fixed-point iteration maps guessed paths of the equity return ``rho``,
the bond share ``psi``, the consumption tax, GDP (which fixes debt) and
every cohort's pension to new values: households solve their lives,
their choices are aggregated, the asset market gives ``rho``, firms give
capital and output, and the government budget gives the consumption tax.
The guess moves a damped step toward the new values.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .demographics import N_AGES, project_population, split_by_type, stationary_population
from .errors import ConvergenceError, InfeasibleHousehold, ValidationError
from .io_config import ModelConfig, ModelInputs, policy_from_inputs
from .policy import Scenario, build_scenario, cohort_retirement_age
from scipy.optimize import brentq

from .production import allocate, output_per_labor, per_labor, solve_rho

log = logging.getLogger(__name__)

RETIREMENT_AGE_INDEX = 45   # age 65


@dataclass
class CohortBook:
    """Lifecycle outcomes per cohort and type, ``[cohort, j, g, h]``; NaN outside the window.

    ``entry[cohort]`` is the entry offset ``e``. ``a`` holds assets entering
    each age. ``value``/``weight`` are remaining discounted utility and the
    sum of discount weights from the cohort's first modelled period.
    """

    entry: np.ndarray
    c: np.ndarray
    l: np.ndarray
    y: np.ndarray
    tax: np.ndarray
    a: np.ndarray
    u: np.ndarray
    pension: np.ndarray
    efficiency: np.ndarray
    retirement_age: np.ndarray  # [cohort, g, h], model age
    value: np.ndarray           # [cohort, g, h]
    weight: np.ndarray          # [cohort, g, h]
    start: np.ndarray           # [cohort], first modelled age index

    def index(self, e: int) -> int:
        return int(e - self.entry[0])


@dataclass
class EconomyPath:
    """Yearly equilibrium sequences (detrended levels) plus the household book."""

    years: np.ndarray
    Y: np.ndarray
    gdp: np.ndarray
    C: np.ndarray          # resource-side consumption: households plus health services
    C_hh: np.ndarray
    X_T: np.ndarray
    X_I: np.ndarray
    G: np.ndarray
    B: np.ndarray
    K: np.ndarray          # [t, 4] order 1T, 1I, 2T, 2I
    L: np.ndarray
    L_sector: np.ndarray   # [t, 2]
    w: np.ndarray
    i_k: np.ndarray
    i_d: np.ndarray
    r: np.ndarray
    psi: np.ndarray
    tauc: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    P: np.ndarray
    M: np.ndarray
    oop: np.ndarray
    Tw: np.ndarray
    Pi1: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    A: np.ndarray
    V: np.ndarray
    pop: np.ndarray        # total population mass
    Z: np.ndarray          # trend level, 1 in the start year
    B_next: np.ndarray     # debt carried into the following year
    growth: float          # trend growth factor per year
    base_year: int = 2020
    report_start: int = 2015
    report_end: int = 2115
    label: str = ""
    iterations: int = 0
    residual_trace: list = field(default_factory=list)
    book: CohortBook = None
    n: np.ndarray = None   # population [t, j, g, h]
    tax_labor_scale: float = 1.0

    @property
    def K_T(self):
        return self.K[:, 0] + self.K[:, 2]

    @property
    def K_I(self):
        return self.K[:, 1] + self.K[:, 3]

    def level_gdp(self) -> np.ndarray:
        return self.gdp * self.Z

    def year_index(self, year) -> np.ndarray:
        return np.asarray(year) - self.years[0]

    def resource_residual(self) -> np.ndarray:
        """``(Y - C - X_T - X_I - G) / GDP`` per year."""
        return (self.Y - self.C - self.X_T - self.X_I - self.G) / self.gdp

    def government_residual(self, tech) -> np.ndarray:
        """Budget identity residual relative to GDP."""
        d1, d2 = tech.tau_div
        lhs = self.growth * self.B_next
        rhs = ((1 + self.i_d) * self.B + self.G + self.P + self.M - self.Tw
               - self.tauc * self.C_hh - tech.tau_profit * self.Pi1 - d1 * self.D1 - d2 * self.D2)
        return (lhs - rhs) / self.gdp

    def asset_residual(self) -> np.ndarray:
        """Household wealth minus debt and the market value of capital, relative to GDP."""
        return (self.A - self.B - self.V) / self.gdp

    def capital_output(self) -> np.ndarray:
        """Tangible capital over GDP."""
        return self.K_T / self.gdp


# ---------------------------------------------------------------- shared pieces

def _effective_profile(prod, R):
    """Efficiency with earnings stopping at model age ``R``.

    Ages 65 to R-1 use the data profile where it is positive and otherwise
    keep the age-64 value, so a data pack can override the flat extension.
    """
    e = prod.copy()
    last = RETIREMENT_AGE_INDEX - 1
    if R - 1 > RETIREMENT_AGE_INDEX:
        seg = e[RETIREMENT_AGE_INDEX:R - 1]
        e[RETIREMENT_AGE_INDEX:R - 1] = np.where(seg > 0, seg, e[last])
    e[R - 1:] = 0.0
    return e


def _health(inputs: ModelInputs, s, copay_med, copay_ltc):
    """Out-of-pocket and insurer-covered expected health costs per person, ``[..., j, g]``.

    Expected costs are survival-weighted per-capita costs.
    """
    mH = s * inputs.medical
    mL = s * inputs.cert_rate * inputs.ltc
    cm = np.asarray(copay_med)[..., None]
    cl = np.asarray(copay_ltc)[..., None]
    return cm * mH + cl * mL, (1 - cm) * mH + (1 - cl) * mL


def _year_accounts(tech, debt, rho, L, K, K_next, A, B, B_next, E, oop, P, M, Tw, i_d, growth):
    """Firm and government accounts of one year given this and next year's stocks and debt.

    Household spending ``E`` includes the consumption tax, so consumption is
    ``E`` less the revenue the tax must raise. Government consumption is a
    share of GDP, which gives GDP in closed form.
    """
    al = allocate(tech, rho, L)
    dT, dI = np.array(tech.delta_T), np.array(tech.delta_I)
    psiG = debt.gov_consumption_share
    XT = growth * K_next[[0, 2]] - (1 - dT) * K[[0, 2]]
    XI = growth * K_next[[1, 3]] - (1 - dI) * K[[1, 3]]
    Pi1 = al.p1 * al.Y1 - al.w * al.L_sector[0] - XI[0] - dT[0] * K[0]
    Pi2 = al.p2 * al.Y2 - al.w * al.L_sector[1] - XI[1] - dT[1] * K[2]
    # distributions net of new tangible investment, so equity earns rho in both sectors
    D1 = (1 - tech.tau_profit) * Pi1 - (growth * K_next[0] - K[0])
    D2 = Pi2 - (growth * K_next[2] - K[2])
    d1, d2 = tech.tau_div
    # budget needs other than government consumption
    other = ((1 + i_d) * B + P + M - Tw - tech.tau_profit * Pi1 - d1 * D1 - d2 * D2
             - growth * B_next)
    gdp = E - other + oop + M + XT.sum()
    G = psiG * gdp
    C = E - other - G
    return dict(al=al, rho=rho, K=K, XT=XT.sum(), XI=XI.sum(), gdp=gdp, G=G, B=B,
                B_next=B_next, Pi1=Pi1, D1=D1, D2=D2, C=C, tauc=(other + G) / C)


def _secant(f, x0, scale, tol=1e-13):
    """Root of a nearly linear ``f`` near ``x0``; ``None`` if the iteration fails."""
    x1 = x0 * (1 + 1e-4)
    try:
        f0, f1 = f(x0), f(x1)
        for _ in range(40):
            if abs(f1) <= tol * scale:
                return x1
            if f1 == f0:
                return None
            x0, f0, x1 = x1, f1, x1 - f1 * (x1 - x0) / (f1 - f0)
            f1 = f(x1)
    except ValidationError:
        return None
    return None


def _solve_gdp(f, g0, scale):
    """GDP solving ``f(g) = 0``; secant first, then a bracketing search."""
    g = _secant(f, g0, scale)
    if g is not None:
        return g

    def safe(x):
        try:
            return f(x)
        except ValidationError:
            return np.nan
    grid = g0 * np.exp(np.linspace(-3, 3, 121))
    vals = np.array([safe(x) for x in grid])
    ok = np.isfinite(vals)
    sign = np.where(ok[:-1] & ok[1:] & (np.sign(vals[:-1]) != np.sign(vals[1:])))[0]
    if sign.size == 0:
        raise ConvergenceError("no GDP level is consistent with the debt rule and the budget")
    i = sign[np.argmin(np.abs(np.log(grid[sign] / g0)))]
    return brentq(f, grid[i], grid[i + 1], xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps,
                  maxiter=200)


def _firm_government(cfg: ModelConfig, A, L, E_hh, oop, M, P, Tw, i_d, growth, tail_growth,
                     B0=None, gdp_guess=None):
    """Asset market, firms and budget closure over a block of years.

    Debt is ``psi_B`` times same-year GDP, so each year's GDP solves one
    scalar equation: debt fixes the equity return through the asset market,
    the return fixes capital and investment, and the budget then fixes
    consumption and GDP. Years are solved backwards because investment needs
    next year's capital. ``B0`` is the debt inherited in the first year;
    without it the block is one stationary year. Stocks after the block grow
    at ``tail_growth``.
    """
    tech, debt = cfg.tech, cfg.debt
    n = len(A)
    i_d = np.broadcast_to(np.asarray(i_d, dtype=float), (n,))
    psiB = debt.debt_to_gdp
    if gdp_guess is None:
        gdp_guess = (E_hh + oop + M) / 0.75
    acc = [None] * n

    def year(t, B, nxt):
        rho = solve_rho(tech, A[t] - B, L[t])
        K = per_labor(tech, rho)[1] * L[t]
        if nxt is None:
            K_next, B_next = K * (1 + tail_growth), B * (1 + tail_growth)
        else:
            K_next, B_next = nxt["K"], nxt["B"]
        return _year_accounts(tech, debt, rho, L[t], K, K_next, A[t], B, B_next, E_hh[t],
                              oop[t], P[t], M[t], Tw[t], i_d[t], growth)

    for t in range(n - 1, -1, -1):
        nxt = acc[t + 1] if t + 1 < n else None
        if t == 0 and B0 is not None:
            acc[t] = year(t, B0, nxt)
            continue
        f = lambda g: g - year(t, psiB * g, nxt)["gdp"]
        g = _solve_gdp(f, gdp_guess[t], E_hh[t])
        acc[t] = year(t, psiB * g, nxt)
    col = lambda k: np.array([a[k] for a in acc])
    al = [a["al"] for a in acc]
    B, C_hh, K = col("B"), col("C"), col("K")
    return dict(rho=col("rho"), K=K, L_sector=np.array([x.L_sector for x in al]),
                Y=np.array([x.Y for x in al]), Y1=np.array([x.Y1 for x in al]),
                Y2=np.array([x.Y2 for x in al]), p1=np.array([x.p1 for x in al]),
                p2=np.array([x.p2 for x in al]), w=np.array([x.w for x in al]), B=B,
                B_next=col("B_next"), X_T=col("XT"), X_I=col("XI"), C=C_hh + oop + M,
                C_hh=C_hh, gdp=col("gdp"), G=col("G"), Pi1=col("Pi1"), D1=col("D1"),
                D2=col("D2"), tauc=col("tauc"), psi=B / A, V=K @ tech.equity_prices())


def _solve_one(a0, gross, price, growth, R0, omega, tauc, table, prefs, g, warm, tol, cohort, j0):
    sigma = prefs.sigma[g]
    a, status, _, bad = _kernels.solve_life(
        float(a0), gross, price, growth, R0, omega, tauc, table.lower, table.rate,
        table.intercept, prefs.gamma, sigma, prefs.beta, warm, tol, 500)
    if status == 2:
        raise InfeasibleHousehold(
            f"budget infeasible for cohort entering at offset {cohort}, age index {j0 + bad}",
            cohort=cohort, age=j0 + bad)
    out = _kernels.life_paths(a, gross, price, R0, omega, tauc, table.lower, table.rate,
                              table.intercept, prefs.gamma, sigma)
    return a, out


def _discount(beta, price, growth):
    phi = np.ones(len(price))
    phi[1:] = np.cumprod(beta * price[:-1] / growth[:-1])
    return phi


# ---------------------------------------------------------------- steady state

def _steady_households(cfg, inputs, prices, s, JR, kappa, oop, G, warm, W):
    """Lives of one stationary cohort per type at constant prices."""
    J = N_AGES
    prefs = cfg.preferences
    R = int(JR)
    gross = np.full(J, 1 + prices["r"])
    grow = np.full(J, G)
    tauc = np.full(J, prices["tauc"])
    Zrel = G ** np.arange(J, dtype=float)   # trend relative to entry
    res = {k: np.zeros((J, 2, 2)) for k in ("c", "l", "y", "tax", "a", "u", "pension", "eff")}
    res["a"] = np.zeros((J + 1, 2, 2))
    res["value"] = np.zeros((2, 2))
    res["weight"] = np.zeros((2, 2))
    newW = np.zeros((2, 2))
    for g in range(2):
        price = s[:, g] * G
        for h in range(2):
            eff = _effective_profile(inputs.productivity[:, g, h], R)
            pen = np.zeros(J)
            pen[R - 1:] = kappa * W[g, h] / (R - 1) / Zrel[R - 1:]
            R0 = pen - oop[:, g]
            omega = prices["w"] * eff
            a, out = _solve_one(0.0, gross, price, grow, R0, omega, tauc, inputs.table, prefs, g,
                                warm[:, g, h], cfg.solver.household_tol, 0, 0)
            res["a"][:, g, h] = a
            for k, row in (("c", 0), ("l", 1), ("y", 2), ("tax", 3), ("u", 5)):
                res[k][:, g, h] = out[row]
            res["pension"][:, g, h] = pen
            res["eff"][:, g, h] = eff
            phi = _discount(prefs.beta, price, grow)
            res["value"][g, h] = phi @ out[5]
            res["weight"][g, h] = phi.sum()
            newW[g, h] = np.sum(out[2, :R - 1] * Zrel[:R - 1])
    res["W"] = newW
    return res


def solve_steady_state(cfg: ModelConfig, inputs: ModelInputs, survival_year: int = None,
                       pop_growth: float = 0.0, scenario: Scenario = None, year: int = None,
                       guess: dict = None, label: str = "initial") -> EconomyPath:
    """Detrended stationary equilibrium with a stationary population.

    The population is stationary for ``pop_growth`` and the survival of
    ``survival_year`` (default: start year). Policy is the scenario's
    schedule in ``year`` (default: status quo in the start year).
    """
    st = cfg.solver
    survival_year = cfg.start_year if survival_year is None else survival_year
    if scenario is None:
        scenario = build_scenario("baseline", "none", [cfg.start_year], policy_from_inputs(cfg, inputs))
        year = cfg.start_year
    k = int(scenario.at(year if year is not None else scenario.years[-1]))
    JR, kappa = int(scenario.retirement_age[k]), float(scenario.kappa[k])
    s = inputs.survival.at(survival_year)
    n = stationary_population(s, pop_growth, inputs.type_shares)
    G = 1 + cfg.tech.trend_growth
    oop, covered = _health(inputs, s, scenario.copay_medical[k], scenario.copay_ltc[k])
    i_d = float(cfg.bond_rate(year if year is not None else cfg.start_year))
    tech, J = cfg.tech, N_AGES

    x = dict(rho=0.06, psi=0.2, tauc=0.1, W=None)
    if guess is not None:
        x.update({k: guess[k] for k in x if k in guess})
        x["W"] = np.array(x["W"], dtype=float)
    if x["W"] is None:
        x["W"] = np.full((2, 2), 5.0)
    warm = np.zeros((J + 1, 2, 2))
    damping = st.damping
    trace = []
    best = np.inf
    worse = 0
    for it in range(1, st.max_iter + 1):
        r = x["psi"] * i_d + (1 - x["psi"]) * x["rho"]
        w = (1 - tech.capital_share) * output_per_labor(tech, x["rho"])
        hh = _steady_households(cfg, inputs, dict(r=r, w=w, tauc=x["tauc"]), s, JR, kappa,
                                oop, G, warm, x["W"])
        warm = hh["a"]
        agg = {key: np.array([np.sum(n * hh[key][:J])]) for key in ("c", "a", "tax", "pension")}
        L = np.array([np.sum(n * hh["l"] * hh["eff"])])
        oopT = np.array([np.sum(n * oop[:, :, None])])
        MT = np.array([np.sum(n * covered[:, :, None])])
        fg = _firm_government(cfg, agg["a"], L, (1 + x["tauc"]) * agg["c"], oopT, MT,
                              agg["pension"], agg["tax"], i_d, G, pop_growth)
        new = dict(rho=fg["rho"][0], psi=fg["psi"][0], tauc=fg["tauc"][0], W=hh["W"])
        diff = max(abs(new["rho"] - x["rho"]), abs(new["psi"] - x["psi"]),
                   abs(new["tauc"] - x["tauc"]),
                   float(np.max(np.abs(new["W"] / x["W"] - 1))))
        trace.append(diff)
        log.debug("steady state %s iter %d diff %.3e damping %.2f", label, it, diff, damping)
        if diff <= st.tol:
            break
        if diff < best:
            best, worse = diff, 0
        else:
            worse += 1
            if worse >= 5 and damping > 0.02:
                damping *= 0.5
                worse = 0
        for key in x:
            x[key] = x[key] + damping * (new[key] - x[key])
    else:
        raise ConvergenceError(
            f"steady state ({label}) did not converge in {st.max_iter} iterations; "
            f"last change {trace[-1]:.3e}", residuals=trace)
    pop_total = float(np.sum(n))
    book = CohortBook(entry=np.array([0]), c=hh["c"][None], l=hh["l"][None], y=hh["y"][None],
                      tax=hh["tax"][None], a=hh["a"][None, :J], u=hh["u"][None],
                      pension=hh["pension"][None], efficiency=hh["eff"][None],
                      retirement_age=np.full((1, 2, 2), JR), value=hh["value"][None],
                      weight=hh["weight"][None], start=np.array([0]))
    one = lambda v: np.atleast_1d(np.asarray(v, dtype=float))
    path = EconomyPath(
        years=np.array([year if year is not None else cfg.start_year]), Y=fg["Y"], gdp=fg["gdp"],
        C=fg["C"], C_hh=fg["C_hh"], X_T=fg["X_T"], X_I=fg["X_I"], G=fg["G"], B=fg["B"],
        K=fg["K"], L=L, L_sector=fg["L_sector"], w=fg["w"], i_k=fg["rho"], i_d=one(i_d),
        r=one(fg["psi"] * i_d + (1 - fg["psi"]) * fg["rho"]), psi=fg["psi"], tauc=fg["tauc"],
        p1=fg["p1"], p2=fg["p2"], Y1=fg["Y1"], Y2=fg["Y2"], P=agg["pension"], M=MT, oop=oopT,
        Tw=agg["tax"], Pi1=fg["Pi1"], D1=fg["D1"], D2=fg["D2"], A=agg["a"], V=fg["V"],
        pop=one(pop_total), Z=one(1.0), B_next=fg["B_next"], growth=G, base_year=cfg.base_year,
        report_start=cfg.report_start, report_end=cfg.report_end, label=label, iterations=it,
        residual_trace=trace, book=book, n=n[None])
    path.state = dict(rho=x["rho"], psi=x["psi"], tauc=x["tauc"], W=x["W"].copy(),
                      pop_growth=pop_growth, survival_year=survival_year, JR=JR, kappa=kappa)
    return path


def terminal_steady_state(cfg: ModelConfig, inputs: ModelInputs, scenario: Scenario = None,
                          guess: dict = None) -> EconomyPath:
    """Stationary equilibrium under long-run demographics and end-of-horizon policy."""
    if scenario is None:
        scenario = build_scenario("baseline", "none", [cfg.start_year], policy_from_inputs(cfg, inputs))
    return solve_steady_state(cfg, inputs, survival_year=int(inputs.survival.years[-1]),
                              pop_growth=inputs.growth.long_run, scenario=scenario,
                              year=int(scenario.years[-1]), guess=guess, label="terminal")


def balanced_growth_path(cfg: ModelConfig, inputs: ModelInputs, scenario: Scenario = None,
                         horizon: int = None, terminal: EconomyPath = None) -> EconomyPath:
    """Terminal stationary equilibrium laid out over ``horizon`` years.

    Detrended per-capita aggregates are constant; population shrinks at the
    long-run rate while the trend grows, so level GDP grows at
    ``(1 + g_Z)(1 + g_n) - 1``.
    """
    horizon = cfg.solver.horizon if horizon is None else horizon
    ss = terminal if terminal is not None else terminal_steady_state(cfg, inputs, scenario)
    gn = ss.state["pop_growth"]
    t = np.arange(horizon)
    scale = (1 + gn) ** t
    years = cfg.start_year + t
    fields_scaled = ("Y", "gdp", "C", "C_hh", "X_T", "X_I", "G", "B", "L", "P", "M", "oop",
                     "Tw", "Pi1", "D1", "D2", "A", "V", "pop", "Y1", "Y2", "B_next")
    kw = {}
    for f in fields_scaled:
        kw[f] = getattr(ss, f)[0] * scale
    for f in ("w", "i_k", "i_d", "r", "psi", "tauc", "p1", "p2"):
        kw[f] = np.full(horizon, getattr(ss, f)[0])
    kw["K"] = ss.K[0][None] * scale[:, None]
    kw["L_sector"] = ss.L_sector[0][None] * scale[:, None]
    kw["Z"] = ss.growth ** t
    path = EconomyPath(years=years, growth=ss.growth, base_year=cfg.base_year,
                       report_start=cfg.report_start, report_end=cfg.report_end,
                       label="balanced growth", iterations=ss.iterations,
                       residual_trace=ss.residual_trace, book=ss.book, **kw)
    path.state = ss.state
    return path


# ---------------------------------------------------------------- transition

@dataclass
class _Context:
    cfg: ModelConfig
    inputs: ModelInputs
    scenario: Scenario
    T: int
    X: int                  # extended horizon T + J
    n: np.ndarray           # [T, J, g, h]
    s_ext: np.ndarray       # [X, J, g]
    oop_ext: np.ndarray     # [X, J, g]
    cov_ext: np.ndarray     # [X, J, g]
    kappa_ext: np.ndarray   # [X]
    G: float
    Z_ext: np.ndarray       # trend level for offsets -J .. X-1, index t + J
    i_d: np.ndarray         # [T]
    init: EconomyPath
    term: EconomyPath
    R_c: np.ndarray         # [cohort] model retirement age
    entries: np.ndarray


def _context(cfg, inputs, scenario, init, term, population=None):
    T, J = cfg.solver.horizon, N_AGES
    X = T + J
    years_ext = cfg.start_year + np.arange(X)
    if population is None:
        # base-year masses by age and gender, split into types per the configured normalization
        pop0 = split_by_type(inputs.population0.sum(axis=2), inputs.type_shares,
                             cfg.population_mode)
        population = project_population(pop0, inputs.survival, inputs.growth,
                                        inputs.type_shares, T - 1, cfg.start_year)
    s_ext = inputs.survival.at(years_ext)
    idx = scenario.at(years_ext)
    oop, cov = _health(inputs, s_ext, scenario.copay_medical[idx], scenario.copay_ltc[idx])
    G = 1 + cfg.tech.trend_growth
    entries = np.arange(-(J - 1), T)
    JR_full = scenario.retirement_age[scenario.at(cfg.start_year + np.arange(-J, X))]
    R_c = np.array([cohort_retirement_age(JR_full[e + J: e + 2 * J], 0) for e in entries])
    return _Context(cfg=cfg, inputs=inputs, scenario=scenario, T=T, X=X, n=population,
                    s_ext=s_ext, oop_ext=oop, cov_ext=cov, kappa_ext=scenario.kappa[idx], G=G,
                    Z_ext=G ** np.arange(-J, X, dtype=float), i_d=cfg.bond_rate(years_ext[:T]),
                    init=init, term=term, R_c=R_c, entries=entries)


def _new_book(ctx):
    NC, J = len(ctx.entries), N_AGES
    nan = lambda: np.full((NC, J, 2, 2), np.nan)
    return CohortBook(entry=ctx.entries, c=nan(), l=nan(), y=nan(), tax=nan(), a=nan(), u=nan(),
                      pension=np.zeros((NC, J, 2, 2)), efficiency=np.zeros((NC, J, 2, 2)),
                      retirement_age=np.repeat(ctx.R_c[:, None, None], 2, 1).repeat(2, 2),
                      value=np.zeros((NC, 2, 2)), weight=np.zeros((NC, 2, 2)),
                      start=np.maximum(0, -ctx.entries))


def _pensions(ctx, book, W):
    """Pension per cohort and age: ``kappa_t W / (R - 1)`` detrended, paid from model age R."""
    J = N_AGES
    pen = np.zeros_like(book.pension)
    for ci, e in enumerate(ctx.entries):
        R = ctx.R_c[ci]
        j = np.arange(R - 1, J)
        t = e + j
        pen[ci, R - 1:] = (ctx.kappa_ext[t][:, None, None] * W[ci] / (R - 1)
                           / ctx.Z_ext[t + J][:, None, None])
    return pen


def _earnings_sum(ctx, book):
    """Career earnings in trend-level units; pre-start years use the initial steady state."""
    J = N_AGES
    W = np.zeros((len(ctx.entries), 2, 2))
    y_ss = ctx.init.book.y[0]
    for ci, e in enumerate(ctx.entries):
        R = ctx.R_c[ci]
        j = np.arange(R - 1)
        Zt = ctx.Z_ext[e + j + J][:, None, None]
        y = np.where((e + j >= 0)[:, None, None], book.y[ci, :R - 1],
                     y_ss[:R - 1])
        W[ci] = np.sum(y * Zt, axis=0)
    return W


def _solve_households(ctx, prices, pension, warm, book):
    """Solve every cohort alive in the horizon; fills ``book`` in place."""
    cfg, inputs, J = ctx.cfg, ctx.inputs, N_AGES
    prefs, table = cfg.preferences, inputs.table
    gross_ext = 1 + prices["r"]
    w_ext, tauc_ext = prices["w"], prices["tauc"]
    grow = np.full(J, ctx.G)
    a_init = ctx.init.book.a[0]
    for ci, e in enumerate(ctx.entries):
        j0 = max(0, -e)
        j = np.arange(j0, J)
        t = e + j
        R = ctx.R_c[ci]
        P = J - j0
        gr = grow[:P]
        for g in range(2):
            price = ctx.s_ext[t, j, g] * ctx.G
            for h in range(2):
                eff = _effective_profile(inputs.productivity[:, g, h], R)[j0:]
                R0 = pension[ci, j0:, g, h] - ctx.oop_ext[t, j, g]
                a0 = a_init[j0, g, h] if j0 > 0 else 0.0
                wm = warm[ci, j0:, g, h]
                wm = np.append(wm, 0.0)
                if np.isnan(wm).any():
                    wm = np.zeros(P + 1)
                a, out = _solve_one(a0, gross_ext[t], price, gr, R0, w_ext[t] * eff,
                                    tauc_ext[t], table, prefs, g, wm,
                                    cfg.solver.household_tol, int(e), j0)
                book.a[ci, j0:, g, h] = a[:-1]
                book.c[ci, j0:, g, h] = out[0]
                book.l[ci, j0:, g, h] = out[1]
                book.y[ci, j0:, g, h] = out[2]
                book.tax[ci, j0:, g, h] = out[3]
                book.u[ci, j0:, g, h] = out[5]
                book.efficiency[ci, j0:, g, h] = eff
                phi = _discount(prefs.beta, price, gr)
                book.value[ci, g, h] = phi @ out[5]
                book.weight[ci, g, h] = phi.sum()
    book.pension[:] = pension
    return book


def _year_view(ctx, arr):
    """``arr[cohort, j, g, h]`` rearranged to ``[t, j, g, h]`` for the horizon years."""
    J = N_AGES
    t = np.arange(ctx.T)[:, None]
    j = np.arange(J)[None, :]
    ci = t - j + (J - 1)
    return arr[ci, j]


def _aggregate(ctx, book):
    n = ctx.n
    view = lambda a: np.nansum(n * np.nan_to_num(_year_view(ctx, a)), axis=(1, 2, 3))
    T = ctx.T
    C_hh = view(book.c)
    L = np.sum(n * np.nan_to_num(_year_view(ctx, book.l) * _year_view(ctx, book.efficiency)),
               axis=(1, 2, 3))
    A = view(book.a)
    Tw = view(book.tax)
    P = view(book.pension)
    oop = np.sum(n * ctx.oop_ext[:T, :, :, None], axis=(1, 2, 3))
    M = np.sum(n * ctx.cov_ext[:T, :, :, None], axis=(1, 2, 3))
    return C_hh, L, A, Tw, P, oop, M


def _changes(x, new) -> dict:
    """Sup-norm change per guessed path; GDP and pensions in relative terms."""
    out = {}
    for k in x:
        d = new[k] / x[k] - 1 if k == "W" else new[k] - x[k]
        out[k] = float(np.max(np.abs(d)))
    return out


def _extend(v, tail, X):
    return np.concatenate([v, np.full(X - len(v), tail)])


class TransitionMap:
    """One fixed-point step over the transition paths, ``x -> new``."""

    KEYS = ("rho", "psi", "tauc", "W")

    def __init__(self, cfg, inputs, scenario, initial, terminal, population=None):
        self.cfg = cfg
        self.ctx = _context(cfg, inputs, scenario, initial, terminal, population)
        self.term = terminal.state
        self.pop = self.ctx.n.sum(axis=(1, 2, 3))
        self.book = _new_book(self.ctx)
        self.warm = np.full((len(self.ctx.entries), N_AGES, 2, 2), np.nan)
        self.last = None
        # debt carried into the start year: initial stationary debt per person
        self.B0 = initial.B[0] / initial.pop[0] * self.pop[0]

    def initial_guess(self) -> dict:
        """Paths moving smoothly from the initial to the terminal stationary values."""
        ctx, T = self.ctx, self.ctx.T
        ini, term = ctx.init, ctx.term
        wgt = np.clip(np.arange(T) / 80.0, 0, 1)
        x = {k: (1 - wgt) * ini.state[k] + wgt * self.term[k] for k in ("rho", "psi", "tauc")}
        x["W"] = ini.state["W"][None] * ctx.G ** ctx.entries[:, None, None]
        return x

    def __call__(self, x: dict) -> dict:
        ctx, cfg, tech = self.ctx, self.cfg, self.cfg.tech
        X, term = ctx.X, self.term
        rho_e = _extend(x["rho"], term["rho"], X)
        psi_e = _extend(x["psi"], term["psi"], X)
        i_d_e = _extend(ctx.i_d, ctx.i_d[-1], X)
        prices = dict(r=psi_e * i_d_e + (1 - psi_e) * rho_e,
                      w=np.array([(1 - tech.capital_share) * output_per_labor(tech, r)
                                  for r in rho_e]),
                      tauc=_extend(x["tauc"], term["tauc"], X))
        pension = _pensions(ctx, self.book, x["W"])
        self.book = _solve_households(ctx, prices, pension, self.warm, self.book)
        self.warm = self.book.a
        C_hh, L, A, Tw, P, oop, M = _aggregate(ctx, self.book)
        fg = _firm_government(cfg, A, L, (1 + x["tauc"]) * C_hh, oop, M, P, Tw, ctx.i_d, ctx.G,
                              term["pop_growth"], B0=self.B0,
                              gdp_guess=None if self.last is None else self.last["gdp"])
        self.last = dict(fg, L=L, A=A, Tw=Tw, P=P, oop=oop, M=M)
        return dict(rho=fg["rho"], psi=fg["psi"], tauc=fg["tauc"], W=_earnings_sum(ctx, self.book))

    def path(self, label, iterations, trace) -> EconomyPath:
        ctx, cfg, fg = self.ctx, self.cfg, self.last
        T, J = ctx.T, N_AGES
        return EconomyPath(
            years=cfg.start_year + np.arange(T), Y=fg["Y"], gdp=fg["gdp"], C=fg["C"],
            C_hh=fg["C_hh"], X_T=fg["X_T"], X_I=fg["X_I"], G=fg["G"], B=fg["B"], K=fg["K"],
            L=fg["L"], L_sector=fg["L_sector"], w=fg["w"], i_k=fg["rho"], i_d=ctx.i_d,
            r=fg["psi"] * ctx.i_d + (1 - fg["psi"]) * fg["rho"], psi=fg["psi"], tauc=fg["tauc"],
            p1=fg["p1"], p2=fg["p2"], Y1=fg["Y1"], Y2=fg["Y2"], P=fg["P"], M=fg["M"],
            oop=fg["oop"], Tw=fg["Tw"], Pi1=fg["Pi1"], D1=fg["D1"], D2=fg["D2"], A=fg["A"],
            V=fg["V"], pop=self.pop, Z=ctx.Z_ext[J:J + T], B_next=fg["B_next"], growth=ctx.G,
            base_year=cfg.base_year, report_start=cfg.report_start, report_end=cfg.report_end,
            label=label, iterations=iterations, residual_trace=trace, book=self.book, n=ctx.n)


def solve_transition(cfg: ModelConfig, inputs: ModelInputs, scenario: Scenario = None,
                     initial: EconomyPath = None, terminal: EconomyPath = None,
                     population=None, guess: dict = None, label: str = None) -> EconomyPath:
    """Damped fixed point over the whole transition path.

    Cohorts alive in the start year inherit the initial steady state's
    assets by age and type; years at or after the horizon use the terminal
    stationary prices.
    """
    t0 = time.perf_counter()
    st = cfg.solver
    if scenario is None:
        scenario = build_scenario("baseline", "none", cfg.start_year + np.arange(st.horizon),
                                  policy_from_inputs(cfg, inputs))
    label = label or scenario.label
    initial = initial if initial is not None else solve_steady_state(cfg, inputs)
    terminal = terminal if terminal is not None else terminal_steady_state(
        cfg, inputs, scenario, guess=initial.state)
    F = TransitionMap(cfg, inputs, scenario, initial, terminal, population)
    if guess is None:
        x = F.initial_guess()
    else:
        x = {k: np.array(guess[k], dtype=float) for k in F.KEYS}
        if "warm" in guess:
            F.warm = guess["warm"]
    damping = st.damping
    trace = []
    best, worse = np.inf, 0
    for it in range(1, st.max_iter + 1):
        new = F(x)
        parts = _changes(x, new)
        diff = max(parts.values())
        trace.append(diff)
        log.info("transition %s iter %d diff %.3e damping %.3f (%s)", label, it, diff, damping,
                 " ".join(f"{k} {v:.1e}" for k, v in parts.items()))
        if diff <= st.tol:
            break
        if diff < best:
            best, worse = diff, 0
        else:
            worse += 1
            if worse >= 3 and damping > 0.02:
                damping *= 0.5
                worse, best = 0, diff
        for k in x:
            x[k] = x[k] + damping * (new[k] - x[k])
    else:
        raise ConvergenceError(f"transition ({label}) did not converge in {st.max_iter} "
                               f"iterations; last change {trace[-1]:.3e}", residuals=trace)
    path = F.path(label, it, trace)
    path.state = dict(x, warm=F.warm)
    path.elapsed = time.perf_counter() - t0
    path.scenario = scenario
    return path
