"""Write the stylized Japan data pack to src/olgreform/data.

Every series is a smooth approximation read off published aggregates
(census age groups, projected births, wage-structure hourly wages,
per-capita health spending). Values are approximate by construction.

    python scripts/build_stylized_data.py [--out DIR]
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

AGES = np.arange(20, 120)
YEARS = np.arange(2015, 2066)
GENDERS = ("male", "female")
EMP = ("regular", "contingent")

# Life expectancy at age 20 (years remaining), start and end of the projection.
E20 = {"male": (61.6, 66.0), "female": (67.8, 71.9)}
GOMPERTZ_SLOPE = {"male": 0.098, "female": 0.112}

# 2015 population by 5-year age group (thousands), both sexes, and male share.
POP_GROUPS = [
    (20, 5970, 0.512), (25, 6410, 0.509), (30, 7290, 0.506), (35, 8320, 0.504),
    (40, 9780, 0.503), (45, 8670, 0.502), (50, 7950, 0.499), (55, 7560, 0.496),
    (60, 8540, 0.490), (65, 9760, 0.481), (70, 7790, 0.465), (75, 6340, 0.436),
    (80, 4990, 0.391), (85, 3170, 0.325), (90, 1430, 0.250), (95, 400, 0.190),
    (100, 62, 0.130), (105, 4, 0.100), (110, 0.3, 0.100), (115, 0.02, 0.100),
]

TYPE_SHARES = {("male", "regular"): 0.41, ("male", "contingent"): 0.10,
               ("female", "regular"): 0.235, ("female", "contingent"): 0.255}

# Births (millions) by year; entrants at 20 are births lagged 20 years.
BIRTHS = [(1995, 1.187), (2000, 1.191), (2005, 1.063), (2010, 1.071), (2015, 1.006),
          (2020, 0.841), (2025, 0.800), (2030, 0.780), (2035, 0.760), (2040, 0.740),
          (2045, 0.700), (2050, 0.650), (2055, 0.610), (2060, 0.585), (2065, 0.557),
          (2075, 0.504), (2085, 0.456), (2095, 0.412)]

# Hourly wages (thousand yen) at ages 22, 27, ..., 62.
WAGE = {
    ("male", "regular"): [1.40, 1.70, 2.00, 2.30, 2.55, 2.80, 3.00, 2.90, 2.20],
    ("male", "contingent"): [1.15, 1.30, 1.40, 1.45, 1.45, 1.45, 1.45, 1.50, 1.55],
    ("female", "regular"): [1.30, 1.55, 1.70, 1.85, 1.95, 2.00, 2.00, 1.90, 1.70],
    ("female", "contingent"): [1.10, 1.20, 1.20, 1.20, 1.15, 1.15, 1.15, 1.15, 1.20],
}
# Efficiency units per thousand yen of hourly wage.
PRODUCTIVITY_SCALE = 4.0

# Per-capita medical spending (10 million yen) at group midpoints.
MEDICAL = [(22, 0.0084), (27, 0.0100), (32, 0.0120), (37, 0.0135), (42, 0.0160),
           (47, 0.0200), (52, 0.0260), (57, 0.0330), (62, 0.0420), (67, 0.0530),
           (72, 0.0690), (77, 0.0840), (82, 0.0950), (87, 0.1050), (92, 0.1100),
           (119, 0.1100)]
LTC_PER_USER = 0.19
CERT_RATE = [(20, 0.0), (39, 0.0), (40, 0.001), (62, 0.004), (67, 0.015), (72, 0.035),
             (77, 0.080), (82, 0.190), (87, 0.370), (92, 0.550), (97, 0.700), (119, 0.700)]


def gompertz_survival(level, slope):
    hazard = np.minimum(level * np.exp(slope * (AGES + 0.5 - 20)), 5.0)
    s = np.exp(-hazard)
    s[-1] = 0.0
    return s


def life_expectancy(s):
    alive = np.concatenate([[1.0], np.cumprod(s[:-1])])
    return alive.sum() - 0.5


def survival_table():
    rows = []
    for g in GENDERS:
        slope = GOMPERTZ_SLOPE[g]
        levels = [brentq(lambda A: life_expectancy(gompertz_survival(A, slope)) - e, 1e-8, 1.0)
                  for e in E20[g]]
        for y in YEARS:
            w = (y - YEARS[0]) / (YEARS[-1] - YEARS[0])
            level = np.exp((1 - w) * np.log(levels[0]) + w * np.log(levels[1]))
            for age, s in zip(AGES, gompertz_survival(level, slope)):
                rows.append((y, age, g, s))
    return rows


def population_2015():
    edges = np.array([a for a, _, _ in POP_GROUPS] + [120], dtype=float)
    out = {}
    for k, g in enumerate(GENDERS):
        mass = np.array([n * (m if k == 0 else 1 - m) for _, n, m in POP_GROUPS])
        cum = PchipInterpolator(edges, np.concatenate([[0.0], np.cumsum(mass)]))
        single = np.diff(cum(np.arange(20, 121)))
        out[g] = np.maximum(single, 0.0)
    return out


def entrant_growth():
    yrs, births = np.array(BIRTHS).T
    f = PchipInterpolator(yrs + 20, np.log(births))
    t = np.arange(2015, 2116)
    return t, np.exp(np.diff(f(np.arange(2015, 2117)))) - 1


def productivity():
    mid = np.arange(22, 65, 5)
    out = {}
    for key, w in WAGE.items():
        f = PchipInterpolator(mid, w, extrapolate=True)
        e = np.zeros(AGES.size)
        work = AGES < 65
        e[work] = PRODUCTIVITY_SCALE * f(AGES[work])
        out[key] = e
    return out


def health():
    ma, mv = np.array(MEDICAL).T
    ca, cv = np.array(CERT_RATE).T
    med = np.interp(AGES, ma, mv)
    cert = np.interp(AGES, ca, cv)
    return med, cert


def write(path, header, rows, fmt):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt[i].format(v) if isinstance(fmt[i], str) else v for i, v in enumerate(r)])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/olgreform/data"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)

    write(out / "survival.csv", ["year", "age", "gender", "s"], survival_table(),
          ["{}", "{}", "{}", "{:.10f}"])

    pop = population_2015()
    total = sum(p.sum() for p in pop.values())
    rows = []
    for age_i, age in enumerate(AGES):
        for g in GENDERS:
            within = {e: TYPE_SHARES[(g, e)] / sum(TYPE_SHARES[(g, x)] for x in EMP) for e in EMP}
            for e in EMP:
                rows.append((age, g, e, pop[g][age_i] * within[e] / total))
    write(out / "population0.csv", ["age", "gender", "emp_type", "mass"], rows,
          ["{}", "{}", "{}", "{:.12e}"])

    write(out / "type_shares.csv", ["gender", "emp_type", "share"],
          [(g, e, TYPE_SHARES[(g, e)]) for g in GENDERS for e in EMP], ["{}", "{}", "{:.6f}"])

    t, rate = entrant_growth()
    write(out / "cohort_growth.csv", ["year", "rate"], zip(t, rate), ["{}", "{:.8f}"])

    prod = productivity()
    write(out / "productivity.csv", ["age", "gender", "emp_type", "efficiency"],
          [(age, g, e, prod[(g, e)][i]) for i, age in enumerate(AGES) for g in GENDERS for e in EMP],
          ["{}", "{}", "{}", "{:.8f}"])

    med, cert = health()
    write(out / "health_costs.csv", ["age", "gender", "medical", "ltc", "cert_rate"],
          [(age, g, med[i], LTC_PER_USER, cert[i]) for i, age in enumerate(AGES) for g in GENDERS],
          ["{}", "{}", "{:.6f}", "{:.6f}", "{:.6f}"])

    write(out / "copay_baseline.csv", ["age", "medical_rate", "ltc_rate"],
          [(age, 0.3 if age < 70 else (0.2 if age < 75 else 0.1), 0.1) for age in AGES],
          ["{}", "{:.2f}", "{:.2f}"])

    from olgreform.fiscal import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_LOWER, DEFAULT_RATE
    write(out / "tax_table.csv", ["lower", "rate", "alpha", "beta"],
          zip(DEFAULT_LOWER, DEFAULT_RATE, DEFAULT_ALPHA, DEFAULT_BETA),
          ["{:.1f}", "{:.3f}", "{:.4f}", "{:.4f}"])


if __name__ == "__main__":
    main()
