"""Compiled per-period and per-life kernels for the household problem.

Period problem: given resources ``R`` (everything except labor income net
of the labor tax) choose consumption and earnings ``y = omega * l`` to
maximize ``log c + gamma (1 - l)^(1 - sigma) / (1 - sigma)`` (``sigma != 1``) subject to
``(1 + tau_c) c = R + y - T(y)``. Its solution is summarized by the
marginal value of resources ``lam = 1 / ((1 + tau_c) c)``.

Life problem: choose the asset path ``a_1 .. a_{P-1}`` (``a_0`` given,
``a_P = 0``, ``a >= 0``) where period ``p`` has
``R_p = gross_p a_p - price_p a_{p+1} + R0_p``. Solved by projected Newton
on the row-scaled first-order conditions, which are tridiagonal.
"""
import numpy as np
from numba import njit

TINY = 1e-300


@njit(cache=True)
def tax_at(y, lower, rate, icpt):
    i = 0
    n = lower.shape[0]
    while i + 1 < n and y >= lower[i + 1]:
        i += 1
    return icpt[i] + rate[i] * y, i


@njit(cache=True)
def labor_choice(lam, omega, lower, rate, gamma, sigma):
    """Optimal earnings at marginal value ``lam``.

    Returns ``(y, bracket, interior)``. ``interior`` is False at a bracket
    kink or at zero earnings, where earnings do not respond to ``lam``.
    """
    if omega <= 0.0:
        return 0.0, 0, False
    n = lower.shape[0]
    for i in range(n):
        x = lam * omega * (1.0 - rate[i]) / gamma
        if x > 1.0:
            yi = omega * (1.0 - np.exp(-np.log(x) / sigma))
        else:
            yi = 0.0
        if yi <= lower[i]:
            return lower[i], i, False
        ub = lower[i + 1] if i + 1 < n else np.inf
        if yi < ub:
            return yi, i, True
    return 0.0, 0, False  # unreachable


@njit(cache=True)
def _interior(R, omega, tau, icpt, kappa, sigma, xlo, xhi):
    """Leisure ``x`` in ``[xlo, xhi]`` solving ``kappa x^sigma - (1-tau) omega (1-x) + icpt = R``.

    The left side is increasing and convex in ``z = x^sigma`` when
    ``sigma < 1`` and in ``z = x`` otherwise, so Newton started at the right
    end descends monotonically to the root. Returns ``(x, v, dv/dR)`` with
    ``v = x^sigma``.
    """
    b = (1.0 - tau) * omega
    p = 1.0 / sigma if sigma < 1.0 else 1.0
    e = sigma * p
    zlo = xlo ** (1.0 / p)
    z = xhi ** (1.0 / p)
    dg = 1.0
    for _ in range(200):
        zp = z ** p
        ze = z ** e
        g = kappa * ze - b * (1.0 - zp) + icpt - R
        dg = kappa * e * ze / z + b * p * zp / z if z > 0.0 else kappa + b
        zn = z - g / dg
        if zn < zlo:
            zn = zlo
        if zn >= z:
            break
        if z - zn <= 1e-16 * z:
            z = zn
            break
        z = zn
    x = z ** p
    v = x ** sigma
    # dv/dR = (dv/dz) / (dg/dz)
    dvdz = 1.0 if sigma < 1.0 else sigma * v / x
    return x, v, dvdz / dg


@njit(cache=True)
def period_solve(R, omega, tauc, lower, rate, icpt, gamma, sigma):
    """Solve one period at resources ``R``.

    Walks the earnings segments in order of rising ``lam``: zero earnings,
    then alternately the interior of bracket ``i`` and the kink at its upper
    bound. The budget gap ``1/lam - net(lam) - R`` falls along the walk, so
    the first segment whose right end has a non-positive gap holds the root.
    Returns ``(lam, y, tax, c, l, u, d2)`` with ``d2 = dlam/dR``, or
    ``lam = -1`` when ``R`` cannot finance positive consumption.
    """
    n = lower.shape[0]
    y = 0.0
    tax = 0.0
    d2 = 0.0
    x = 1.0
    if omega <= 0.0:
        if R <= 0.0:
            return -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
        lam = 1.0 / R
        d2 = -lam * lam
    else:
        tmax, _ = tax_at(omega, lower, rate, icpt)
        if R + omega - tmax <= 0.0:
            return -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
        kappa = omega * (1.0 - rate[0]) / gamma
        # zero earnings up to lam = 1 / kappa_0
        if R >= kappa:
            lam = 1.0 / R
            d2 = -lam * lam
        else:
            found = False
            for i in range(n):
                kappa = omega * (1.0 - rate[i]) / gamma
                ub = lower[i + 1] if i + 1 < n else np.inf
                x_start = 1.0 - lower[i] / omega  # leisure where this segment starts
                if ub < omega:
                    x_end = 1.0 - ub / omega
                    net_end = ub - (icpt[i] + rate[i] * ub)
                    # gap at the right end of the interior segment
                    if kappa * x_end ** sigma - net_end - R <= 0.0:
                        x, v, dv = _interior(R, omega, rate[i], icpt[i], kappa, sigma, x_end, x_start)
                        y = omega * (1.0 - x)
                        tax = icpt[i] + rate[i] * y
                        found = True
                    else:
                        # kink at ub: lam runs from x_end^-sigma/kappa_i to x_end^-sigma/kappa_{i+1}
                        kn = omega * (1.0 - rate[i + 1]) / gamma
                        if kn * x_end ** sigma - net_end - R <= 0.0:
                            y = ub
                            tax = icpt[i] + rate[i] * ub
                            x = x_end
                            found = True
                            d2 = -1.0 / ((R + net_end) * (R + net_end))
                else:
                    x, v, dv = _interior(R, omega, rate[i], icpt[i], kappa, sigma, 0.0, x_start)
                    y = omega * (1.0 - x)
                    tax = icpt[i] + rate[i] * y
                    found = True
                if found:
                    if y != ub:
                        d2 = -dv / (kappa * v * v)
                    break
    c_exp = R + y - tax
    if c_exp <= TINY:
        return -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    c = c_exp / (1.0 + tauc)
    lam = 1.0 / c_exp
    l = y / omega if omega > 0.0 else 0.0
    util = np.log(c) + gamma * (1.0 - l) ** (1.0 - sigma) / (1.0 - sigma)
    return lam, y, tax, c, l, util, d2


@njit(cache=True)
def _evaluate(a, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma, beta,
              lam, d2, util, ok):
    P = gross.shape[0]
    feasible = True
    for p in range(P):
        R = gross[p] * a[p] - price[p] * a[p + 1] + R0[p]
        res = period_solve(R, omega[p], tauc[p], lower, rate, icpt, gamma, sigma)
        if res[0] <= 0.0:
            feasible = False
            ok[p] = False
            lam[p] = np.nan
        else:
            ok[p] = True
            lam[p] = res[0]
            util[p] = res[5]
            d2[p] = res[6]
    return feasible


@njit(cache=True)
def _gradient(a, gross, growth, beta, lam, g):
    # g[p] is the scaled derivative with respect to a[p + 1]
    P = gross.shape[0]
    for p in range(P - 1):
        g[p] = -growth[p] * lam[p] + beta * gross[p + 1] * lam[p + 1]


@njit(cache=True)
def _proj_norm(a, g):
    m = 0.0
    for p in range(g.shape[0]):
        if a[p + 1] <= 0.0 and g[p] <= 0.0:
            continue
        v = abs(g[p])
        if v > m:
            m = v
    return m


@njit(cache=True)
def _min_feasible_path(a0, gross, price, R0, omega, lower, rate, icpt, cushion):
    """Smallest asset path leaving ``cushion`` spare resources in later periods."""
    P = gross.shape[0]
    a = np.zeros(P + 1)
    a[0] = a0
    for p in range(P - 1, 0, -1):
        if omega[p] > 0.0:
            t, _ = tax_at(omega[p], lower, rate, icpt)
            netmax = omega[p] - t
        else:
            netmax = 0.0
        need = (price[p] * a[p + 1] - R0[p] - netmax + cushion) / gross[p]
        a[p] = need if need > 0.0 else 0.0
    return a


@njit(cache=True)
def _init_path(a0, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma, beta,
               a, lam, d2, util, ok):
    """Make ``a`` feasible; returns the first infeasible period or -1."""
    P = gross.shape[0]
    if _evaluate(a, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma, beta,
                 lam, d2, util, ok):
        return -1
    amin = _min_feasible_path(a0, gross, price, R0, omega, lower, rate, icpt, 0.0)
    R = gross[0] * a0 - price[0] * amin[1] + R0[0]
    slack = R
    if omega[0] > 0.0:
        t, _ = tax_at(omega[0], lower, rate, icpt)
        slack = R + omega[0] - t
    if slack <= 0.0 or P == 1:
        for p in range(P):
            if not ok[p]:
                return p
        return 0
    cushion = slack / (2.0 * P)
    for _ in range(60):
        b = _min_feasible_path(a0, gross, price, R0, omega, lower, rate, icpt, cushion)
        for k in range(P + 1):
            a[k] = b[k]
        if _evaluate(a, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma, beta,
                     lam, d2, util, ok):
            return -1
        cushion *= 0.5
    return 0


@njit(cache=True)
def solve_life(a0, gross, price, growth, R0, omega, tauc, lower, rate, icpt,
               gamma, sigma, beta, a_init, tol, max_iter):
    """Projected Newton on the asset path.

    ``growth[p]`` is the trend growth factor from ``p`` to ``p + 1``;
    ``price[p]`` is survival times that factor. The first-order conditions
    are scaled by ``phi_p s_p`` (``phi`` the discount weight), which turns
    them into Euler residuals ``-growth_p lam_p + beta gross_{p+1} lam_{p+1}``
    without changing the Newton direction. Variables at zero with a negative
    residual form the active set; the step is accepted by an Armijo test on
    the discounted objective. Returns ``(a, status, iterations, period)``:
    status 0 converged, 1 iteration limit, 2 infeasible at ``period``.
    """
    P = gross.shape[0]
    a = a_init.copy()
    a[0] = a0
    a[P] = 0.0
    for p in range(1, P):
        if a[p] < 0.0:
            a[p] = 0.0
    lam = np.empty(P)
    d2 = np.empty(P)
    util = np.empty(P)
    ok = np.empty(P, dtype=np.bool_)
    bad = _init_path(a0, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma, beta,
                     a, lam, d2, util, ok)
    if bad >= 0:
        return a, 2, 0, bad
    if P == 1:
        return a, 0, 0, -1
    n = P - 1
    phi = np.empty(P)
    phi[0] = 1.0
    for p in range(1, P):
        phi[p] = phi[p - 1] * beta * price[p - 1] / growth[p - 1]
    g = np.empty(n)
    dg = np.empty(n)
    up = np.empty(n)
    lo = np.empty(n)
    rhs = np.empty(n)
    step = np.empty(n)
    trial = np.empty(P + 1)
    lam_t = np.empty(P)
    d2_t = np.empty(P)
    util_t = np.empty(P)
    ok_t = np.empty(P, dtype=np.bool_)
    active = np.empty(n, dtype=np.bool_)
    _gradient(a, gross, growth, beta, lam, g)
    it = 0
    while True:
        merit = _proj_norm(a, g)
        if merit <= tol:
            return a, 0, it, -1
        if it >= max_iter:
            return a, 1, it, -1
        it += 1
        eps = 0.0
        for k in range(n):
            v = a[k + 1] + g[k]
            v = a[k + 1] - (v if v > 0.0 else 0.0)
            eps = max(eps, abs(v))
        eps = min(eps, 1e-6)
        for k in range(n):
            active[k] = a[k + 1] <= eps and g[k] < 0.0
        for k in range(n):
            p = k
            diag = growth[p] * price[p] * d2[p] + beta * gross[p + 1] ** 2 * d2[p + 1]
            if active[k]:
                dg[k] = 1.0
                up[k] = 0.0
                lo[k] = 0.0
                rhs[k] = g[k] / abs(diag)
            else:
                dg[k] = diag
                up[k] = -beta * gross[p + 1] * price[p + 1] * d2[p + 1] if k + 1 < n else 0.0
                lo[k] = -growth[p] * gross[p] * d2[p] if k > 0 else 0.0
                if k + 1 < n and active[k + 1]:
                    up[k] = 0.0
                if k > 0 and active[k - 1]:
                    lo[k] = 0.0
                rhs[k] = -g[k]
        for k in range(1, n):
            m = lo[k] / dg[k - 1]
            dg[k] -= m * up[k - 1]
            rhs[k] -= m * rhs[k - 1]
        step[n - 1] = rhs[n - 1] / dg[n - 1]
        for k in range(n - 2, -1, -1):
            step[k] = (rhs[k] - up[k] * step[k + 1]) / dg[k]
        # predicted first-order gain of the free part, in objective units
        slope = 0.0
        noise = 0.0
        for k in range(n):
            if not active[k]:
                slope += phi[k] * price[k] / growth[k] * g[k] * step[k]
        for p in range(P):
            noise += phi[p] * (abs(util[p]) + 1.0)
        noise *= 1e-14
        alpha = 1.0
        accepted = False
        for _ls in range(50):
            trial[0] = a[0]
            trial[P] = 0.0
            for k in range(n):
                v = a[k + 1] + alpha * step[k]
                trial[k + 1] = v if v > 0.0 else 0.0
            if _evaluate(trial, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma,
                         beta, lam_t, d2_t, util_t, ok_t):
                gain = 0.0
                for p in range(P):
                    gain += phi[p] * (util_t[p] - util[p])
                if gain >= 1e-4 * alpha * slope - noise:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            if merit <= 1e3 * tol:
                return a, 0, it, -1
            return a, 1, it, -1
        for k in range(P + 1):
            a[k] = trial[k]
        for p in range(P):
            lam[p] = lam_t[p]
            d2[p] = d2_t[p]
            util[p] = util_t[p]
        _gradient(a, gross, growth, beta, lam, g)


@njit(cache=True)
def life_paths(a, gross, price, R0, omega, tauc, lower, rate, icpt, gamma, sigma):
    """Per-period outcomes along a given asset path."""
    P = gross.shape[0]
    out = np.empty((8, P))
    for p in range(P):
        R = gross[p] * a[p] - price[p] * a[p + 1] + R0[p]
        lam, y, tax, c, l, u, d2 = period_solve(R, omega[p], tauc[p], lower, rate, icpt, gamma, sigma)
        out[0, p] = c
        out[1, p] = l
        out[2, p] = y
        out[3, p] = tax
        out[4, p] = lam
        out[5, p] = u
        out[6, p] = R
        out[7, p] = d2
    return out
