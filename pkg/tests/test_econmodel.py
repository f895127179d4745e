import math
from dataclasses import replace

import numpy as np
import pytest

from cdcsim.econmodel import (MIXED, PHYSICAL, PRICING, TABLE1, EconParams, InvestmentStrategy, constant_path,
                              discount_factor, increment_factor, project_cpi, simulate_black_scholes_path,
                              simulate_black_scholes_paths)


def test_zero_vol_physical_path_earns_stock_growth():
    p = EconParams(stock_volatility=0.0)
    path = simulate_black_scholes_path(p, PHYSICAL, 50, seed=3)
    np.testing.assert_allclose(path.stock_return[0, 1:], 0.0773, atol=1e-12)


def test_zero_vol_pricing_path_earns_bond_rate():
    path = simulate_black_scholes_path(TABLE1, PRICING, 50, seed=3)
    np.testing.assert_allclose(path.stock_return[0, 1:], 0.0436, atol=1e-12)


def test_seeded_paths_are_reproducible():
    p = EconParams(stock_volatility=0.2)
    a = simulate_black_scholes_paths(p, 30, 4, seed=9)
    b = simulate_black_scholes_paths(p, 30, 4, seed=9)
    c = simulate_black_scholes_paths(p, 30, 4, seed=10)
    np.testing.assert_array_equal(a.stock_return, b.stock_return)
    assert np.all(a.stock_return[:, 1] != c.stock_return[:, 1])


def test_slices_regenerate_independently():
    p = EconParams(stock_volatility=0.2)
    whole = simulate_black_scholes_paths(p, 20, 10, seed=4)
    part = simulate_black_scholes_paths(p, 20, 3, seed=4, first_index=5)
    np.testing.assert_array_equal(whole.stock_return[5:8], part.stock_return)


def test_substeps_aggregate_to_annual_returns():
    p = EconParams(stock_volatility=0.0)
    path = simulate_black_scholes_path(p, PHYSICAL, 5, seed=1, dt=0.25)
    np.testing.assert_allclose(path.stock_return[0, 1:], 0.0773, atol=1e-12)


@pytest.mark.parametrize("dt", [0.0, -1.0, 0.3])
def test_bad_dt(dt):
    with pytest.raises(ValueError):
        simulate_black_scholes_path(TABLE1, PHYSICAL, 5, seed=1, dt=dt)


def test_mixed_measure_switches_drift():
    p = EconParams(stock_volatility=0.0)
    path = simulate_black_scholes_path(p, MIXED, 10, seed=1, switch_year=4)
    np.testing.assert_allclose(path.stock_return[0, 1:5], 0.0773, atol=1e-12)
    np.testing.assert_allclose(path.stock_return[0, 5:], 0.0436, atol=1e-12)


def test_median_convention_raises_drift():
    p = EconParams(stock_volatility=0.2, drift_convention="median")
    assert p.physical_drift == pytest.approx(math.log(1.0773) + 0.02, rel=1e-15)
    with pytest.raises(ValueError):
        EconParams(drift_convention="mode")


def test_drift_shift_moves_only_physical_drift():
    p = EconParams(stock_drift_shift=0.01)
    assert p.physical_drift == pytest.approx(math.log(1.0873))
    assert p.pricing_drift == pytest.approx(math.log(1.0436))


def test_constant_path_table1_rates():
    path = constant_path(TABLE1, 1)
    assert path.stock_return[0, 1] == 0.0773
    assert path.bond_return[0, 1] == 0.0436
    assert path.cpi[0, 1] == 0.02
    assert path.wage_index[0, 1] == pytest.approx(1.0383)


def test_constant_path_zero_rates():
    p = EconParams(0.0, 0.0, 0.0, 0.0, 0.0)
    np.testing.assert_array_equal(constant_path(p, 30).wage_index, 1.0)


def test_wage_compounding():
    path = constant_path(TABLE1, 200)
    assert path.wage_index[0, 200] == pytest.approx(1.0383 ** 200, rel=1e-9)
    np.testing.assert_allclose(path.wage_index[0, 1:] / path.wage_index[0, :-1], 1.0383, rtol=1e-14)


def test_zero_vol_matches_constant_model():
    bs = simulate_black_scholes_paths(TABLE1, 196, 1, seed=0)
    cp = constant_path(TABLE1, 196)
    assert np.max(np.abs(bs.stock_return - cp.stock_return)) < 1e-12
    np.testing.assert_array_equal(bs.wage_index, cp.wage_index)


def test_projection_is_constant():
    assert project_cpi(TABLE1, 0, 0) == 0.02
    assert project_cpi(replace(TABLE1, cpi=0.0), 3, 7) == 0.0
    assert project_cpi(TABLE1, 5, 3) == project_cpi(TABLE1, 40, 3)


def test_increment_factor():
    assert increment_factor(TABLE1, 0.01, 0, 0) == 1.0
    assert increment_factor(TABLE1, 0.01, 0, 1) == pytest.approx(1.0302)
    assert increment_factor(replace(TABLE1, cpi=0.0), 0.0, 0, 17) == 1.0


def test_discount_factor_examples():
    risky = InvestmentStrategy.constant(1.0)
    safe = InvestmentStrategy.constant(0.0)
    assert discount_factor(risky, TABLE1, 0, 0, 30) == 1.0
    # 1 / 1.0773**2 evaluated directly
    assert discount_factor(risky, TABLE1, 0, 2, 30) == pytest.approx(0.8616416, abs=1e-6)
    assert discount_factor(safe, TABLE1, 0, 1, 30) == pytest.approx(0.958222, abs=1e-6)


def test_discount_factor_follows_lifestyle():
    s = InvestmentStrategy.lifestyle(65, 85, min_age=0, max_age=121)
    got = discount_factor(s, TABLE1, 0, 3, 74)
    r = [0.55 * 0.0773 + 0.45 * 0.0436, 0.5 * 0.0773 + 0.5 * 0.0436, 0.45 * 0.0773 + 0.55 * 0.0436]
    assert got == pytest.approx(1.0 / np.prod(1.0 + np.array(r)), rel=1e-13)


def test_discount_factor_rejects_context_outside_domain():
    s = InvestmentStrategy("age", np.ones(5), origin=20)
    with pytest.raises(ValueError):
        discount_factor(s, TABLE1, 0, 1, 19)


def test_lifestyle_shape():
    s = InvestmentStrategy.lifestyle(65, 85, min_age=0, max_age=121)
    assert s.proportion(40) == 1.0
    assert s.proportion(75) == pytest.approx(0.5)
    assert s.proportion(100) == 0.0
    assert np.all(np.diff(s.values) <= 0.0)


def test_strategy_rejects_bad_proportions():
    with pytest.raises(ValueError):
        InvestmentStrategy("age", np.array([1.2]))
    with pytest.raises(ValueError):
        InvestmentStrategy("calendar", np.array([0.5]))


@pytest.mark.slow
def test_pricing_measure_martingale():
    p = EconParams(stock_volatility=0.2)
    T = 5
    paths = simulate_black_scholes_paths(p, T, 100_000, seed=2024, measure=PRICING)
    growth = np.prod(1.0 + paths.stock_return[:, 1:], axis=1)
    x = math.exp(-p.pricing_drift * T) * growth
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 1.0) < 3.0 * se
