"""Configuration, validated data loading and result emission."""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .demographics import EMP_TYPES, ENTRY_AGE, GENDERS, N_AGES, CohortGrowthPath, SurvivalSchedule
from .errors import DataLoadError, ValidationError
from .fiscal import DebtRule, ProgressiveTaxTable
from .household import GAMMA_DEFAULT, leisure_curvature
from .policy import PolicySettings
from .production import SectorTech

DATA_ENV = "OLGREFORM_DATA_DIR"
DATA_FILES = ("survival.csv", "population0.csv", "type_shares.csv", "cohort_growth.csv",
              "productivity.csv", "health_costs.csv", "copay_baseline.csv", "tax_table.csv")
NUM_FMT = "{:.9e}"


def default_data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("olgreform") / "data"))


@dataclass(frozen=True)
class SolverSettings:
    damping: float = 0.5
    max_iter: int = 400
    tol: float = 1e-8
    horizon: int = 240
    household_tol: float = 1e-11

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValidationError("damping must lie in (0, 1]")
        if self.tol <= 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.horizon < N_AGES + 1:
            raise ValidationError(f"horizon must exceed one lifetime ({N_AGES} years)")


@dataclass(frozen=True)
class Preferences:
    """Household preferences; ``gamma=None`` picks the default for the leisure form."""

    beta: float = 0.983
    gamma: float = None
    zeta_male: float = 0.03
    zeta_female: float = 0.05
    leisure: str = "frisch"

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", GAMMA_DEFAULT.get(self.leisure))
        for z in (self.zeta_male, self.zeta_female):
            leisure_curvature(z, self.leisure)
        if not 0 < self.beta <= 1:
            raise ValidationError("beta must lie in (0, 1]")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        for z in (self.zeta_male, self.zeta_female):
            if not 0 < z < 1:
                raise ValidationError("zeta must lie in (0, 1)")

    @property
    def zeta(self):
        return (self.zeta_male, self.zeta_female)

    @property
    def sigma(self):
        """Leisure curvature by gender."""
        return tuple(leisure_curvature(z, self.leisure) for z in self.zeta)


@dataclass(frozen=True)
class ModelConfig:
    preferences: Preferences = field(default_factory=Preferences)
    tech: SectorTech = field(default_factory=SectorTech)
    debt: DebtRule = field(default_factory=DebtRule)
    policy: PolicySettings = field(default_factory=PolicySettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    data_dir: str = ""
    start_year: int = 2015
    base_year: int = 2020
    report_start: int = 2015
    report_end: int = 2115
    population_mode: str = "gender"
    bond_rate_schedule: tuple = ()   # (year, rate) pairs overriding the constant bond rate

    def __post_init__(self):
        if not self.start_year <= self.base_year <= self.report_end:
            raise ValidationError("base year must lie inside the reporting window")
        if not self.start_year <= self.report_start < self.report_end:
            raise ValidationError("reporting window must start at or after the start year")
        if self.report_end >= self.start_year + self.solver.horizon:
            raise ValidationError("reporting window must end before the horizon")
        if self.population_mode not in ("gender", "joint"):
            raise ValidationError("population_mode must be 'gender' or 'joint'")

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir) if self.data_dir else default_data_dir()

    def bond_rate(self, years) -> np.ndarray:
        """Bond rate per year: the constant rate unless a schedule overrides it."""
        years = np.asarray(years)
        out = np.full(years.shape, self.debt.bond_rate)
        for y, r in sorted(self.bond_rate_schedule):
            out[years >= y] = r
        return out

    def with_solver(self, **kw) -> "ModelConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, solver=replace(self.solver, **kw)) if kw else self

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if hasattr(v, "__dataclass_fields__"):
                v = {k: (x.tolist() if isinstance(x, np.ndarray) else x) for k, x in asdict(v).items()}
            d[f.name] = v
        d["data_dir"] = str(self.data_path)
        return d


_SECTIONS = {"preferences": Preferences, "tech": SectorTech, "debt": DebtRule,
             "policy": PolicySettings, "solver": SolverSettings}


def _coerce(cls, key, text):
    names = {f.name: f for f in fields(cls)}
    if key not in names:
        raise ValidationError(f"unknown key {key!r} in [{cls.__name__}]")
    default = getattr(cls(), key)
    try:
        if isinstance(default, bool):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, (tuple, np.ndarray)):
            vals = tuple(float(x) for x in text.replace(",", " ").split())
            return np.array(vals) if isinstance(default, np.ndarray) else vals
    except ValueError as exc:
        raise ValidationError(f"cannot parse {key} = {text!r}: {exc}") from None
    return text.strip()


def load_config(path=None, **overrides) -> ModelConfig:
    """Read an INI file (sections: model, preferences, tech, debt, policy, solver)."""
    parts = {}
    top = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise DataLoadError(f"config file not found: {p}", diagnostics=[str(p)])
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read(p)
        except configparser.Error as exc:
            raise ValidationError(f"{p}: {exc}") from None
        for sec in cp.sections():
            if sec == "model":
                for k, v in cp[sec].items():
                    if k == "bond_rate_schedule":
                        pairs = [x.split(":") for x in v.replace(",", " ").split()]
                        top[k] = tuple((int(a), float(b)) for a, b in pairs)
                    elif k in ("data_dir", "population_mode"):
                        top[k] = v.strip()
                    elif k in ("start_year", "base_year", "report_start", "report_end"):
                        top[k] = int(v)
                    else:
                        raise ValidationError(f"unknown key {k!r} in [model]")
            elif sec in _SECTIONS:
                cls = _SECTIONS[sec]
                parts[sec] = cls(**{k: _coerce(cls, k, v) for k, v in cp[sec].items()})
            else:
                raise ValidationError(f"unknown config section [{sec}]")
    top.update({k: v for k, v in overrides.items() if v is not None})
    return ModelConfig(**parts, **top)


@dataclass(frozen=True)
class ModelInputs:
    """Validated data arrays; ages are indexed from 0 (age 20)."""

    survival: SurvivalSchedule
    population0: np.ndarray       # [j, g, h]
    type_shares: np.ndarray       # [g, h]
    growth: CohortGrowthPath
    productivity: np.ndarray      # [j, g, h]
    medical: np.ndarray           # per-capita medical cost [j, g]
    ltc: np.ndarray               # per-user LTC cost [j, g]
    cert_rate: np.ndarray         # [j, g]
    copay_medical: np.ndarray     # [j]
    copay_ltc: np.ndarray         # [j]
    table: ProgressiveTaxTable
    hashes: dict = field(default_factory=dict)


def _read_table(path: Path, schema: dict, diags: list):
    """Rows of ``path`` parsed by ``schema`` (column -> (kind, lo, hi)), with per-line diagnostics."""
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(schema):
            diags.append(f"{path.name}:1: header {header} != expected {list(schema)}")
            return rows
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(schema):
                diags.append(f"{path.name}:{line}: expected {len(schema)} fields, got {len(rec)}")
                continue
            row = {}
            for (col, (kind, lo, hi)), text in zip(schema.items(), rec):
                text = text.strip()
                try:
                    if kind == "gender":
                        v = GENDERS.index(text)
                    elif kind == "emp":
                        v = EMP_TYPES.index(text)
                    else:
                        v = kind(text)
                except ValueError:
                    diags.append(f"{path.name}:{line}: column {col}: cannot parse {text!r}")
                    break
                if kind in (int, float) and not (np.isfinite(v) and lo <= v <= hi):
                    diags.append(f"{path.name}:{line}: column {col}: value {text} outside [{lo}, {hi}]")
                    break
                row[col] = v
            else:
                rows.append(row)
    return rows


def _fill(rows, shape, keyfun, col, name, diags):
    out = np.full(shape, np.nan)
    for r in rows:
        idx = keyfun(r)
        if not all(0 <= i < n for i, n in zip(idx, shape)):
            diags.append(f"{name}: key {idx} outside the expected index range")
            continue
        out[idx] = r[col]
    missing = int(np.isnan(out).sum())
    if missing:
        diags.append(f"{name}: {missing} required entries missing")
    return out


def _hash_file(p: Path) -> str:
    return hashlib.sha256(p.read_bytes()).hexdigest()


def load_inputs(config: ModelConfig = None) -> ModelInputs:
    """Load and cross-check every data file; raise :class:`DataLoadError` listing all problems."""
    config = config or ModelConfig()
    d = config.data_path
    missing = [f for f in DATA_FILES if not (d / f).is_file()]
    if missing:
        raise DataLoadError(f"missing data file(s) in {d}: {', '.join(missing)}",
                            diagnostics=[str(d / f) for f in missing])
    diags = []
    amax = ENTRY_AGE + N_AGES - 1
    age = (int, ENTRY_AGE, amax)
    unit = (float, 0.0, 1.0)
    pos = (float, 0.0, np.inf)
    J = N_AGES
    aj = lambda r: r["age"] - ENTRY_AGE

    rows = _read_table(d / "survival.csv", {"year": (int, 1900, 2500), "age": age,
                                            "gender": ("gender", 0, 0), "s": unit}, diags)
    years = sorted({r["year"] for r in rows}) or [config.start_year]
    y0 = years[0]
    s = _fill(rows, (len(years), J, 2), lambda r: (r["year"] - y0, aj(r), r["gender"]), "s",
              "survival.csv", diags)
    if years[0] > config.start_year:
        diags.append(f"survival.csv: first year {years[0]} is after the start year {config.start_year}")

    rows = _read_table(d / "population0.csv", {"age": age, "gender": ("gender", 0, 0),
                                               "emp_type": ("emp", 0, 0), "mass": pos}, diags)
    pop0 = _fill(rows, (J, 2, 2), lambda r: (aj(r), r["gender"], r["emp_type"]), "mass",
                 "population0.csv", diags)

    rows = _read_table(d / "type_shares.csv", {"gender": ("gender", 0, 0),
                                               "emp_type": ("emp", 0, 0), "share": unit}, diags)
    shares = _fill(rows, (2, 2), lambda r: (r["gender"], r["emp_type"]), "share",
                   "type_shares.csv", diags)
    if not np.isnan(shares).any() and abs(shares.sum() - 1) > 1e-6:
        diags.append(f"type_shares.csv: shares sum to {shares.sum():.6f}, not 1")

    rows = _read_table(d / "cohort_growth.csv", {"year": (int, 1900, 2500),
                                                 "rate": (float, -0.5, 0.5)}, diags)
    gy = np.array([r["year"] for r in rows], dtype=int)
    gr = np.array([r["rate"] for r in rows])
    if gy.size and (np.any(np.diff(gy) != 1) or gy[0] > config.start_year):
        diags.append("cohort_growth.csv: years must be consecutive and cover the start year")

    rows = _read_table(d / "productivity.csv", {"age": age, "gender": ("gender", 0, 0),
                                                "emp_type": ("emp", 0, 0), "efficiency": pos}, diags)
    prod = _fill(rows, (J, 2, 2), lambda r: (aj(r), r["gender"], r["emp_type"]), "efficiency",
                 "productivity.csv", diags)

    rows = _read_table(d / "health_costs.csv", {"age": age, "gender": ("gender", 0, 0),
                                                "medical": pos, "ltc": pos, "cert_rate": unit}, diags)
    key = lambda r: (aj(r), r["gender"])
    med = _fill(rows, (J, 2), key, "medical", "health_costs.csv", diags)
    ltc = _fill(rows, (J, 2), key, "ltc", "health_costs.csv", diags)
    cert = _fill(rows, (J, 2), key, "cert_rate", "health_costs.csv", diags)

    rows = _read_table(d / "copay_baseline.csv", {"age": age, "medical_rate": unit,
                                                  "ltc_rate": unit}, diags)
    cm = _fill(rows, (J,), lambda r: (aj(r),), "medical_rate", "copay_baseline.csv", diags)
    cl = _fill(rows, (J,), lambda r: (aj(r),), "ltc_rate", "copay_baseline.csv", diags)

    rows = _read_table(d / "tax_table.csv", {"lower": pos, "rate": unit,
                                             "alpha": (float, -np.inf, np.inf), "beta": pos}, diags)
    if diags:
        raise DataLoadError(f"{len(diags)} problem(s) loading data from {d}:\n  "
                            + "\n  ".join(diags[:50]), diagnostics=diags)
    try:
        table = ProgressiveTaxTable(lower=np.array([r["lower"] for r in rows]),
                                    rate=np.array([r["rate"] for r in rows]),
                                    alpha=np.array([r["alpha"] for r in rows]),
                                    beta=np.array([r["beta"] for r in rows]))
        surv = SurvivalSchedule(np.array(years), s)
        growth = CohortGrowthPath(gy, gr)
    except ValidationError as exc:
        raise DataLoadError(f"{d}: {exc}", diagnostics=[str(exc)]) from None
    return ModelInputs(survival=surv, population0=pop0, type_shares=shares, growth=growth,
                       productivity=prod, medical=med, ltc=ltc, cert_rate=cert,
                       copay_medical=cm, copay_ltc=cl, table=table,
                       hashes={f: _hash_file(d / f) for f in DATA_FILES})


def policy_from_inputs(config: ModelConfig, inputs: ModelInputs) -> PolicySettings:
    """Policy settings with the status-quo copay profiles taken from the data."""
    return replace(config.policy, copay_medical=inputs.copay_medical, copay_ltc=inputs.copay_ltc)


# ---------------------------------------------------------------- emission

def _fmt(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return NUM_FMT.format(float(v))


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path) -> dict:
    """Columns of an emitted CSV; numeric columns come back as float arrays."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    out = {}
    for k, col in zip(header, zip(*body) if body else [()] * len(header)):
        try:
            out[k] = np.array([float(x) for x in col])
        except ValueError:
            out[k] = list(col)
    return out


AGGREGATE_COLUMNS = ("year", "gdp", "gdp_index", "y", "c", "x_t", "x_i", "g", "b", "tau_c",
                     "w", "i_k", "r", "psi", "p1", "p2", "pension", "health")


def aggregate_rows(path, years=None):
    """Rows of aggregates.csv for a solved path, GDP additionally indexed to the base year."""
    yr = path.years if years is None else np.asarray(years)
    idx = yr - path.years[0]
    lvl = path.level_gdp()
    base = lvl[path.base_year - path.years[0]]
    cols = [path.gdp, path.Y, path.C, path.X_T, path.X_I, path.G, path.B, path.tauc,
            path.w, path.i_k, path.r, path.psi, path.p1, path.p2, path.P, path.M]
    for k, t in zip(yr, idx):
        # the base year is exactly 1 by construction
        gi = 1.0 if k == path.base_year else lvl[t] / base
        yield (int(k), cols[0][t], gi, *[c[t] for c in cols[1:]])


def emit_results(out_dir, path=None, welfare=None, decomposition=None, manifest=None,
                 extra: dict = None) -> list:
    """Write the CSV outputs that are available plus ``manifest.json``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ValidationError(f"output directory {out} is not writable: {exc}") from None
    written = []
    if path is not None:
        years = np.arange(path.report_start, path.report_end + 1)
        written.append(write_csv(out / "aggregates.csv", AGGREGATE_COLUMNS,
                                 aggregate_rows(path, years)))
    if welfare is not None:
        written.append(write_csv(out / "welfare.csv",
                                 ("reform", "scenario", "type", "group", "weighting", "cev_percent"),
                                 welfare.rows()))
        written.append(write_csv(out / "welfare_by_cohort.csv",
                                 ("cohort_birth_year", "type", "cev_percent"), welfare.cohort_rows()))
    if decomposition is not None:
        written.append(write_csv(out / "decomposition.csv", ("year", "component", "contribution"),
                                 decomposition.rows()))
    for name, (header, rows) in (extra or {}).items():
        written.append(write_csv(out / name, header, rows))
    if manifest is not None:
        manifest = dict(manifest)
        manifest["outputs"] = {p.name: _hash_file(p) for p in written}
        mp = out / "manifest.json"
        mp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        written.append(mp)
    return written


def run_manifest(config: ModelConfig, inputs: ModelInputs, scenario: str, iterations=None,
                 residual=None, wall_clock=None) -> dict:
    """Manifest whose ``hash`` depends only on configuration, data and scenario."""
    cfg = config.to_dict()
    cfg.pop("data_dir")
    key = json.dumps({"config": cfg, "data": inputs.hashes, "scenario": scenario},
                     sort_keys=True, default=str)
    return {"hash": hashlib.sha256(key.encode()).hexdigest(), "config": cfg,
            "data": inputs.hashes, "scenario": scenario, "iterations": iterations,
            "residual": residual, "wall_clock_seconds": wall_clock}
