from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from olgreform.demographics import N_AGES
from olgreform.errors import DomainError
from olgreform.production import SectorTech, final_good, sector_output
from olgreform.welfare import (COMPONENTS, GROUPS, cev, cohort_welfare_change, group_of,
                               growth_decomposition, reported_entries, welfare_table)

T = 30


def fake_run(value, weight=None, label="run"):
    """A run with cohort values ``[cohort, g, h]`` for entries ``-(J-1) .. T-1``."""
    entries = np.arange(-(N_AGES - 1), T)
    value = np.broadcast_to(np.asarray(value, dtype=float), (entries.size, 2, 2)).copy()
    weight = np.full_like(value, 20.0) if weight is None else weight
    book = SimpleNamespace(entry=entries, value=value, weight=weight,
                           start=np.maximum(0, -entries))
    n = np.ones((T, N_AGES, 2, 2))
    return SimpleNamespace(book=book, years=2015 + np.arange(T), base_year=2020,
                           report_end=2015 + T - 1, n=n, label=label)


def test_cev_examples():
    assert cev(1.0, 1.0, 10.0) == 0.0
    # scaling consumption by 1.02 in every period adds log(1.02) per unit of weight
    w = 17.3
    assert cev(5.0, 5.0 + w * np.log(1.02), w) == pytest.approx(0.02, rel=1e-12)
    with pytest.raises(DomainError):
        cev(1.0, 2.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.floats(-5, 5), st.floats(0.5, 60))
def test_cev_sign_follows_value_change(v, dv, w):
    b = v + dv
    assert np.sign(float(cev(v, b, w))) == np.sign(b - v)


def test_identical_runs_give_zero_everywhere():
    a = fake_run(3.0)
    t = welfare_table(a, fake_run(3.0))
    assert np.all(t.weighted == 0) and np.all(t.unweighted == 0)


def test_uniform_change_gives_uniform_table():
    w = 20.0
    a, b = fake_run(0.0), fake_run(w * np.log(1.01))
    t = welfare_table(a, b)
    np.testing.assert_allclose(t.weighted, 1.0, rtol=1e-12)
    np.testing.assert_allclose(t.unweighted, 1.0, rtol=1e-12)


def test_groups_partition_reported_cohorts():
    a = fake_run(0.0)
    entries = reported_entries(a)
    b = 5
    groups = [group_of(int(e), b) for e in entries]
    assert entries[0] == b - (N_AGES - 1) and entries[-1] == T - 1
    assert groups.count("Future") == T - 1 - b
    assert groups.count("Retire") == N_AGES - 45
    assert groups.count("Worker") == 45
    assert group_of(b, b) == "Worker"
    assert group_of(b - 45, b) == "Retire"
    assert group_of(b - 44, b) == "Worker"


def test_total_is_mass_weighted_mix_of_groups():
    rng = np.random.default_rng(1)
    a = fake_run(0.0)
    b = fake_run(rng.normal(0, 1, (N_AGES - 1 + T, 2, 2)))
    t = welfare_table(a, b)
    mass = t.mass
    b_off = 5
    groups = np.array([group_of(int(e), b_off) for e in t.entries])
    for k in range(4):
        g, h = divmod(k, 2)
        total = sum(t.weighted[k, GROUPS.index(m)] * mass[groups == m, g, h].sum()
                    for m in ("Retire", "Worker", "Future")) / mass[:, g, h].sum()
        assert t.weighted[k, 0] == pytest.approx(total, rel=1e-12)


def test_cohort_change_matches_direct_formula():
    rng = np.random.default_rng(2)
    shape = (N_AGES - 1 + T, 2, 2)
    a = fake_run(rng.normal(0, 1, shape), weight=rng.uniform(5, 30, shape))
    b = fake_run(rng.normal(0, 1, shape))
    e, g, h = 3, 1, 0
    i = e + N_AGES - 1
    expected = 100 * (np.exp((b.book.value[i, g, h] - a.book.value[i, g, h])
                             / a.book.weight[i, g, h]) - 1)
    assert cohort_welfare_change(a, b, e, g, h) == pytest.approx(expected, rel=1e-12)


def test_missing_cohort_or_book_is_a_domain_error():
    a = fake_run(0.0)
    with pytest.raises(DomainError, match="absent"):
        cohort_welfare_change(a, a, T + 5, 0, 0)
    bare = SimpleNamespace(book=None, label="bare")
    with pytest.raises(DomainError, match="no cohort values"):
        cohort_welfare_change(bare, a, 0, 0, 0)


def test_rows_cover_every_cell():
    t = welfare_table(fake_run(0.0), fake_run(1.0))
    rows = list(t.rows())
    assert len(rows) == 2 * 4 * len(GROUPS)
    assert {r[4] for r in rows} == {"weighted", "simple"}
    assert len(list(t.cohort_rows())) == 4 * len(t.entries)


@pytest.mark.slow
def test_real_run_against_itself_is_zero(baseline):
    t = welfare_table(baseline, baseline)
    assert np.all(t.weighted == 0)


def production_path(tech, K, L_sector, Z, pop):
    Y1 = np.array([sector_output(1, 1, k[0], k[1], l[0], tech.theta_T[0], tech.theta_I[0])
                   for k, l in zip(K, L_sector)])
    Y2 = np.array([sector_output(1, 1, k[2], k[3], l[1], tech.theta_T[1], tech.theta_I[1])
                   for k, l in zip(K, L_sector)])
    Y = np.array([final_good(a, b, tech.eta1) for a, b in zip(Y1, Y2)])
    return SimpleNamespace(years=2015 + np.arange(len(Z)), Y=Y, K=K, L_sector=L_sector, Z=Z,
                           pop=pop)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_decomposition_adds_up(seed):
    rng = np.random.default_rng(seed)
    tech = SectorTech()
    n = 12
    path = production_path(tech, rng.uniform(0.5, 5, (n, 4)), rng.uniform(0.2, 2, (n, 2)),
                           np.cumprod(rng.uniform(1.0, 1.02, n)), rng.uniform(0.8, 1.2, n))
    dec = growth_decomposition(path, tech)
    assert dec.parts.shape == (n - 1, len(COMPONENTS))
    assert np.max(np.abs(dec.residual())) <= 1e-8


def test_constant_factors_leave_only_technology():
    tech = SectorTech()
    n = 10
    Z = (1 + tech.trend_growth) ** np.arange(n)
    K = np.array([2.0, 0.5, 1.5, 0.3])[None] / Z[:, None]   # level stocks held fixed
    path = production_path(tech, K, np.tile([0.6, 0.4], (n, 1)), Z, np.ones(n))
    dec = growth_decomposition(path, tech)
    np.testing.assert_allclose(dec.total, dec.component("tech"), atol=1e-14)
    np.testing.assert_allclose(dec.total, (1 - tech.capital_share) * np.log(1 + tech.trend_growth),
                               rtol=1e-12)
