from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdcsim.analytics import (IncomeTrace, compare_schemes, fan_deciles, income_trace,
                              lifetime_mean_replacement_ratio, replacement_ratio, shifted_return_experiment,
                              stable_mean, years_invested)
from cdcsim.econmodel import TABLE1, constant_path
from cdcsim.engine import MULTI_EMPLOYER, derive_multi_employer_strategy

AGES = np.arange(65, 121)


def flat_trace(rho, n=1, salary=1.0):
    return IncomeTrace(60, AGES, np.full((n, AGES.size), rho * salary), np.full(n, salary))


def test_replacement_ratio_of_final_salary_is_one():
    np.testing.assert_array_equal(replacement_ratio(flat_trace(1.0, salary=2.5)), 1.0)


def test_inflation_does_not_move_the_ratio():
    # nominal income 0.4 of final salary, deflated by very different price paths
    lo, hi = constant_path(TABLE1, 130), constant_path(replace(TABLE1, cpi=0.08), 130)
    for path in (lo, hi):
        nominal = 0.4 * path.wage_index[:, [60]] * path.cpi_index / path.cpi_index[:, [60]]
        it = income_trace(nominal, path, 60, 65, 121)
        np.testing.assert_allclose(replacement_ratio(it), 0.4, rtol=1e-12)


def test_zero_final_salary_is_rejected():
    with pytest.raises(ValueError):
        replacement_ratio(IncomeTrace(60, AGES, np.ones((1, AGES.size)), np.zeros(1)))


def test_negative_income_is_rejected():
    with pytest.raises(ValueError):
        IncomeTrace(60, AGES, -np.ones((1, AGES.size)), np.ones(1))


def test_lifetime_mean_scaling():
    it = flat_trace(0.45)
    assert lifetime_mean_replacement_ratio(it, 40, 40)[0] == pytest.approx(0.45)
    assert lifetime_mean_replacement_ratio(it, 20, 40)[0] == pytest.approx(0.225)
    assert lifetime_mean_replacement_ratio(it, 20, 40, normalize=True)[0] == pytest.approx(0.9)
    with pytest.raises(ValueError):
        lifetime_mean_replacement_ratio(it, 0, 40)


def test_lifetime_mean_weights():
    it = IncomeTrace(60, np.arange(65, 67), np.array([[1.0, 3.0]]), np.ones(1))
    assert lifetime_mean_replacement_ratio(it, 40, 40, weights=np.array([3.0, 1.0]))[0] == pytest.approx(1.5)


def test_years_invested_near_start_and_closure(paper_config):
    assert years_invested(paper_config, 0) == 1
    assert years_invested(paper_config, 39) == 40
    assert years_invested(paper_config, 100) == 40 - 1
    assert years_invested(paper_config, 138) == 1


def test_fan_deciles_of_one_to_hundred():
    grid = fan_deciles(np.arange(1.0, 101.0)[:, None])
    np.testing.assert_allclose(grid.deciles[:, 0], [10.9, 20.8, 30.7, 40.6, 50.5, 60.4, 70.3, 80.2, 90.1])


def test_fan_deciles_of_constant():
    grid = fan_deciles(np.full((12, 3), 7.0))
    np.testing.assert_array_equal(grid.deciles, 7.0)


def test_fan_needs_ten_samples():
    with pytest.raises(ValueError):
        fan_deciles(np.ones((9, 4)))


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(10, 40), st.integers(1, 4)), elements=st.floats(-1e6, 1e6)))
def test_fan_is_ordered_and_bounded(x):
    d = fan_deciles(x).deciles
    assert np.all(np.diff(d, axis=0) >= 0.0)
    assert np.all(d >= x.min(axis=0)) and np.all(d <= x.max(axis=0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e12, 1e12), min_size=1, max_size=200), st.randoms())
def test_stable_mean_ignores_order(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert stable_mean(xs) == stable_mean(ys)


# -- scheme comparison -------------------------------------------------------------

def test_compare_thread_invariant(paper_config, bs_params, table):
    kw = dict(generations=[60], schemes=("single_employer", "dc_annuity"))
    a = compare_schemes(paper_config, bs_params, table, 60, 3, threads=1, **kw)
    b = compare_schemes(paper_config, bs_params, table, 60, 3, threads=4, **kw)
    for s in kw["schemes"]:
        np.testing.assert_array_equal(a.lifetime_means[s][60], b.lifetime_means[s][60])


def test_zero_shift_is_the_baseline(paper_config, bs_params, table):
    base = compare_schemes(paper_config, bs_params, table, 200, 9, [60], ("single_employer",))
    shifted = shifted_return_experiment(paper_config, bs_params, table, 0.0, 200, 9, [60])
    assert shifted[60] == base.median("single_employer", 60)


def test_underperformance_hurts_later_generations_more(paper_config, bs_params, table):
    gens = [40, 70, 100]
    base = shifted_return_experiment(paper_config, bs_params, table, 0.0, 1000, 3, gens)
    low = shifted_return_experiment(paper_config, bs_params, table, -0.01, 1000, 3, gens)
    penalty = [base[g] - low[g] for g in gens]
    assert all(p > 0.0 for p in penalty)
    assert penalty[0] < penalty[1] < penalty[2]


def test_outperformance_helps_later_multi_employer_generations(paper_config, bs_params, table):
    strat = derive_multi_employer_strategy(paper_config, bs_params, table)
    multi = replace(paper_config, kind=MULTI_EMPLOYER, strategy=strat)
    gens = [40, 100]
    base = shifted_return_experiment(multi, bs_params, table, 0.0, 1000, 3, gens)
    high = shifted_return_experiment(multi, bs_params, table, 0.01, 1000, 3, gens)
    gain = [high[g] - base[g] for g in gens]
    assert gain[0] > 0.0
    assert gain[1] > gain[0]
