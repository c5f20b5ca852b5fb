"""Two-sector technology with tangible and intangible capital.

Sector ``i`` produces ``Y_i = A K_iT^thT K_iI^thI (Omega L_i)^(1-thT-thI)``
and the final good is ``Y = Y_1^eta1 Y_2^(1-eta1)``. The final good is the
numeraire.

Inside the equilibrium loop everything is detrended by the labor-augmenting
trend ``Z = A^(1/(1-Theta)) Omega`` where ``Theta`` is the aggregate capital
share. Given the after-tax equity return ``rho`` the whole allocation per
unit of labor follows in closed form from the firms' first-order
conditions, see :func:`allocate`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import AllocationError, ValidationError

TFP_CONVENTIONS = ("output", "level")


@dataclass(frozen=True)
class SectorTech:
    """Technology and capital-tax parameters for both sectors.

    ``tfp_convention`` controls how ``gamma_A`` is read. With ``"level"`` the
    TFP level ``A`` grows at exactly ``gamma_A`` per year. With ``"output"``
    (default) ``gamma_A`` is the contribution of TFP to output growth, so
    ``A`` grows at ``(1+gamma_A)^(1-Theta)`` and the trend in output per
    worker is ``(1+gamma_A)(1+gamma_Omega)``.
    """

    theta_T: tuple = (0.45, 0.35)
    theta_I: tuple = (0.15, 0.05)
    delta_T: tuple = (0.08, 0.05)
    delta_I: tuple = (0.08, 0.09)
    eta1: float = 0.64
    gamma_A: float = 0.003
    gamma_Omega: float = 0.007
    tau_profit: float = 0.25
    tau_div: tuple = (0.25, 0.25)
    tfp_convention: str = "output"

    def __post_init__(self):
        for name in ("theta_T", "theta_I", "delta_T", "delta_I", "tau_div"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 2:
                raise ValidationError(f"{name} needs one value per sector")
            object.__setattr__(self, name, v)
        th = np.array(self.theta_T) + np.array(self.theta_I)
        if np.any(np.array(self.theta_T + self.theta_I) <= 0) or np.any(th >= 1):
            raise ValidationError("capital shares must be positive with theta_T + theta_I < 1")
        if np.any(~((np.array(self.delta_T + self.delta_I) > 0) & (np.array(self.delta_T + self.delta_I) < 1))):
            raise ValidationError("depreciation rates must lie in (0, 1)")
        if not 0 < self.eta1 < 1:
            raise ValidationError("eta1 must lie in (0, 1)")
        if not 0 <= self.tau_profit < 1 or any(not 0 <= t < 1 for t in self.tau_div):
            raise ValidationError("capital tax rates must lie in [0, 1)")
        if self.tfp_convention not in TFP_CONVENTIONS:
            raise ValidationError(f"tfp_convention must be one of {TFP_CONVENTIONS}")

    @property
    def eta(self) -> np.ndarray:
        return np.array([self.eta1, 1.0 - self.eta1])

    @property
    def capital_share(self) -> float:
        """Aggregate capital share ``Theta``."""
        return float(np.sum(self.eta * (np.array(self.theta_T) + np.array(self.theta_I))))

    @property
    def labor_split(self) -> np.ndarray:
        """Share of total labor employed in each sector."""
        s = self.eta * (1 - np.array(self.theta_T) - np.array(self.theta_I))
        return s / s.sum()

    @property
    def tfp_growth(self) -> float:
        if self.tfp_convention == "level":
            return self.gamma_A
        return (1 + self.gamma_A) ** (1 - self.capital_share) - 1

    @property
    def trend_growth(self) -> float:
        """Growth rate of the labor-augmenting trend ``Z``."""
        return (1 + self.tfp_growth) ** (1 / (1 - self.capital_share)) * (1 + self.gamma_Omega) - 1

    def tech_path(self, n_years: int, start: int = 0):
        """``(A, Omega, Z)`` for years ``start .. start + n_years - 1``, all 1 at year 0."""
        t = np.arange(start, start + n_years)
        A = (1 + self.tfp_growth) ** t
        Om = (1 + self.gamma_Omega) ** t
        return A, Om, A ** (1 / (1 - self.capital_share)) * Om

    def equity_prices(self) -> np.ndarray:
        """Market value per unit of each capital stock, order (1T, 1I, 2T, 2I).

        Intangible investment in the corporate sector is expensed, so its
        after-tax cost is ``1 - tau_profit``; dividends are taxed on payout.
        """
        d1, d2 = self.tau_div
        return np.array([1 - d1, (1 - d1) * (1 - self.tau_profit), 1 - d2, 1 - d2])


def _require_positive(**kw):
    for k, v in kw.items():
        if np.any(~np.isfinite(v)) or np.any(np.asarray(v) <= 0):
            raise ValidationError(f"{k} must be positive and finite")


def sector_output(A, Omega, K_T, K_I, L, theta_T, theta_I):
    _require_positive(A=A, Omega=Omega, K_T=K_T, K_I=K_I, L=L)
    return A * K_T ** theta_T * K_I ** theta_I * (Omega * L) ** (1 - theta_T - theta_I)


def final_good(Y1, Y2, eta1):
    _require_positive(Y1=Y1, Y2=Y2)
    return Y1 ** eta1 * Y2 ** (1 - eta1)


@dataclass
class FactorPrices:
    w: float
    p1: float
    p2: float
    i_k: float
    rental: np.ndarray = field(default_factory=lambda: np.zeros(4))
    returns: np.ndarray = field(default_factory=lambda: np.zeros(4))
    sector_wages: np.ndarray = field(default_factory=lambda: np.zeros(2))


def factor_prices(tech: SectorTech, K_T, K_I, L, A=1.0, Omega=1.0,
                  strict: bool = False, tol: float = 1e-8) -> FactorPrices:
    """Prices from marginal products for a given allocation.

    ``rental`` holds ``p_i * dY_i/dK`` for (1T, 1I, 2T, 2I); ``returns`` the
    implied after-tax return on each stock. With ``strict=True`` unequal
    sector wages or returns raise :class:`AllocationError`.
    """
    K_T, K_I, L = (np.asarray(x, dtype=float) for x in (K_T, K_I, L))
    thT, thI = np.array(tech.theta_T), np.array(tech.theta_I)
    Yi = sector_output(A, Omega, K_T, K_I, L, thT, thI)
    Y = final_good(Yi[0], Yi[1], tech.eta1)
    p = tech.eta * Y / Yi
    wages = p * (1 - thT - thI) * Yi / L
    rental = np.array([p[0] * thT[0] * Yi[0] / K_T[0], p[0] * thI[0] * Yi[0] / K_I[0],
                       p[1] * thT[1] * Yi[1] / K_T[1], p[1] * thI[1] * Yi[1] / K_I[1]])
    dep = np.array([tech.delta_T[0], tech.delta_I[0], tech.delta_T[1], tech.delta_I[1]])
    ret = rental - dep
    ret[0] *= 1 - tech.tau_profit
    if strict:
        wgap = abs(wages[0] - wages[1]) / wages.mean()
        rgap = ret.max() - ret.min()
        if wgap > tol or rgap > tol:
            raise AllocationError(
                f"allocation not optimal: wage gap {wgap:.3e}, return gap {rgap:.3e}",
                gaps={"wage": wgap, "return": rgap})
    L_tot = L.sum()
    w = float(np.sum(wages * L) / L_tot)
    return FactorPrices(w=w, p1=float(p[0]), p2=float(p[1]), i_k=float(np.mean(ret)),
                        rental=rental, returns=ret, sector_wages=wages)


def _capital_coefficients(tech: SectorTech, rho):
    """Capital per unit of output for (1T, 1I, 2T, 2I) at return ``rho``."""
    eta = tech.eta
    user = np.array([rho / (1 - tech.tau_profit) + tech.delta_T[0], rho + tech.delta_I[0],
                     rho + tech.delta_T[1], rho + tech.delta_I[1]])
    share = np.array([eta[0] * tech.theta_T[0], eta[0] * tech.theta_I[0],
                      eta[1] * tech.theta_T[1], eta[1] * tech.theta_I[1]])
    return share / user


def output_per_labor(tech: SectorTech, rho) -> float:
    """Detrended output per unit of effective labor at return ``rho``."""
    min_rho = -min(min(tech.delta_I), tech.delta_T[1], (1 - tech.tau_profit) * tech.delta_T[0])
    if not rho > min_rho:
        raise ValidationError(f"equity return {rho} implies a non-positive user cost of capital")
    c = _capital_coefficients(tech, rho)
    thT, thI, eta = np.array(tech.theta_T), np.array(tech.theta_I), tech.eta
    s = tech.labor_split
    log_prod = 0.0
    for i in range(2):
        log_prod += eta[i] * (thT[i] * np.log(c[2 * i]) + thI[i] * np.log(c[2 * i + 1])
                              + (1 - thT[i] - thI[i]) * np.log(s[i]))
    return float(np.exp(log_prod / (1 - tech.capital_share)))


def per_labor(tech: SectorTech, rho):
    """Output and the four capital stocks per unit of effective labor at return ``rho``."""
    y = output_per_labor(tech, rho)
    return y, _capital_coefficients(tech, rho) * y


@dataclass
class Allocation:
    """Detrended firm-side allocation for one year."""

    rho: float
    L: float
    Y: float
    Y1: float
    Y2: float
    p1: float
    p2: float
    w: float
    K: np.ndarray  # (1T, 1I, 2T, 2I)
    L_sector: np.ndarray

    @property
    def K_T(self) -> float:
        return float(self.K[0] + self.K[2])

    @property
    def K_I(self) -> float:
        return float(self.K[1] + self.K[3])


def allocate(tech: SectorTech, rho: float, L: float) -> Allocation:
    """Allocation that equalizes the after-tax return ``rho`` on all stocks.

    Capital is ``K_iX = eta_i theta_iX Y / user_iX`` with user cost
    ``rho / (1 - tau_profit) + delta`` for corporate tangibles and
    ``rho + delta`` otherwise; labor splits in proportion to
    ``eta_i (1 - theta_i)``.
    """
    if not L > 0:
        raise ValidationError("effective labor must be positive")
    Y = L * output_per_labor(tech, rho)
    K = _capital_coefficients(tech, rho) * Y
    Ls = tech.labor_split * L
    thT, thI = np.array(tech.theta_T), np.array(tech.theta_I)
    Yi = np.array([sector_output(1.0, 1.0, K[0], K[1], Ls[0], thT[0], thI[0]),
                   sector_output(1.0, 1.0, K[2], K[3], Ls[1], thT[1], thI[1])])
    p = tech.eta * Y / Yi
    w = (1 - tech.capital_share) * Y / L
    return Allocation(rho=float(rho), L=float(L), Y=float(Y), Y1=float(Yi[0]), Y2=float(Yi[1]),
                      p1=float(p[0]), p2=float(p[1]), w=float(w), K=K, L_sector=Ls)


def wage_at(tech: SectorTech, rho) -> float:
    return (1 - tech.capital_share) * output_per_labor(tech, rho)


def equity_value(tech: SectorTech, rho: float, L: float) -> float:
    """Market value of all capital claims when labor ``L`` earns return ``rho``."""
    return float(tech.equity_prices() @ allocate(tech, rho, L).K)


def solve_rho(tech: SectorTech, value: float, L: float, lo: float = None, hi: float = 2.0,
              xtol: float = 1e-14) -> float:
    """Return at which capital claims are worth ``value`` (value falls in rho)."""
    if not value > 0:
        raise ValidationError(f"private wealth net of debt must be positive, got {value:.6g}")
    if lo is None:
        lo = -min(min(tech.delta_I), tech.delta_T[1], (1 - tech.tau_profit) * tech.delta_T[0]) + 1e-9
    q = tech.equity_prices()
    target = np.log(value / L)
    f = lambda r: np.log(q @ per_labor(tech, r)[1]) - target
    if f(hi) > 0:
        raise ValidationError("capital claims too valuable even at the upper return bound")
    if f(lo) < 0:
        raise ValidationError("capital claims not valuable enough even at the lower return bound")
    return float(brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))


@dataclass
class Profits:
    Pi1: float
    D1: float
    D2: float
    Pi2: float


def profits_dividends(p1, p2, Y1, Y2, w, L1, L2, X1I, X2I, K1T, K2T, K1T_next,
                      tau_profit, delta_1T, delta_2T) -> Profits:
    """Corporate profit and both sectors' dividends.

    ``Pi1 = p1 Y1 - w L1 - X1I - delta_1T K1T`` and
    ``D1 = (1 - tau_profit) Pi1 - (K1T' - K1T)``. The household-business
    dividend is its profit, computed the same way without the profit tax.
    """
    Pi1 = p1 * Y1 - w * L1 - X1I - delta_1T * K1T
    D1 = (1 - tau_profit) * Pi1 - K1T_next + K1T
    Pi2 = p2 * Y2 - w * L2 - X2I - delta_2T * K2T
    return Profits(Pi1=Pi1, D1=D1, D2=Pi2, Pi2=Pi2)


def capital_step(K, delta, X):
    if np.any(np.asarray(K) < 0) or np.any(np.asarray(X) < 0):
        raise ValidationError("capital and investment must be non-negative")
    return (1 - delta) * K + X


def resource_identity(C, X_T, X_I, G, Y) -> float:
    """Goods-market residual ``Y - C - X_T - X_I - G``."""
    return Y - C - X_T - X_I - G


def gdp(C, X_T, G):
    """Measured GDP; intangible investment is not counted."""
    return C + X_T + G
