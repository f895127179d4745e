from dataclasses import replace

import numpy as np
import pytest

from cdcsim.econmodel import EconParams, InvestmentStrategy, constant_path, simulate_black_scholes_paths
from cdcsim.engine import MULTI_EMPLOYER, LiabilityBasis, simulate_fund
from cdcsim.valuation import (Estimate, accrual_values, attributed_pensions, expected_instantaneous_pnl,
                              instantaneous_pnl_scenarios, lifetime_q_values, pnl_by_age, pnl_surface)


def test_estimate_interval():
    e = Estimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert e.mean == 2.5 and e.n == 4
    lo, hi = e.ci95
    assert hi - e.mean == pytest.approx(e.mean - lo)
    assert (hi - lo) / 2 == pytest.approx(1.959964 * np.std([1, 2, 3, 4], ddof=1) / 2, rel=1e-6)


def test_single_sample_has_no_spread():
    assert Estimate.from_samples(np.array([0.3])).stderr == 0.0


def test_accrual_value_matches_direct_discounting(paper_config, params, table):
    # constant model at the target: every factor is (1 + cpi)
    H = 196
    basis = LiabilityBasis(paper_config, params, table, horizon=H)
    tr = simulate_fund(paper_config, params, table, constant_path(params, H), accrual_years=[10], basis=basis)
    # the last member dies before year 195, after which nothing is indexed
    np.testing.assert_allclose(tr.index_factor[0, 11:195], 1.02, rtol=1e-12)
    unit = accrual_values(tr, basis, 10, np.ones((1, basis.J)), params.discount_rate)[0]
    eff = table.with_certain_survival_below(65)
    v = 1.02 / 1.0436
    for j in (0, 20, 39, 45):
        age = 25 + j
        want = sum(v ** ell * eff.survival_probability(age, ell)
                   for ell in range(max(65 - age, 0), 121 - age))
        assert unit[j] == pytest.approx(want, rel=1e-10)


def test_attribution_is_complete(paper_config, bs_params, table):
    s = 75
    H = 196
    basis = LiabilityBasis(paper_config, bs_params, table, horizon=H)
    paths = simulate_black_scholes_paths(bs_params, H, 5, seed=11)
    tr = simulate_fund(paper_config, bs_params, table, paths, accrual_years=range(s + 1), basis=basis)
    total = np.zeros(paths.n_paths)
    for t in range(s + 1):
        per = attributed_pensions(tr, basis, t, s)
        for j in range(basis.J - (s - t)):
            total += per[:, j] * basis.entry_survival[j + s - t]
    np.testing.assert_allclose(total, tr.pensions[:, s], rtol=1e-9)


def test_attribution_rejects_reversed_years(paper_config, params, table):
    basis = LiabilityBasis(paper_config, params, table, horizon=196)
    tr = simulate_fund(paper_config, params, table, constant_path(params, 196), accrual_years=[5], basis=basis)
    with pytest.raises(ValueError):
        attributed_pensions(tr, basis, 5, 4)


def test_pnl_is_zero_without_risk(paper_config, params, table):
    riskless = replace(paper_config, kind=MULTI_EMPLOYER, strategy=InvestmentStrategy.constant(0.0, kind="time"))
    bs = EconParams(stock_volatility=0.2)
    res = pnl_by_age(riskless, bs, table, 20, 50, seed=1)
    assert len(res) == 40
    assert max(abs(e.mean) for e in res.values()) < 1e-12


def test_pnl_thread_invariant(paper_config, bs_params, table):
    a = pnl_by_age(paper_config, bs_params, table, 30, 300, seed=4, threads=1)
    b = pnl_by_age(paper_config, bs_params, table, 30, 300, seed=4, threads=3)
    assert a == b


def test_old_gain_more_than_young(paper_config, bs_params, table):
    t = 30
    res = pnl_by_age(paper_config, bs_params, table, t, 1000, seed=12)
    oldest, youngest = res[t], res[t + 39]
    assert oldest.mean > 0.0 > youngest.mean
    assert (1.0 + oldest.mean) / (1.0 + youngest.mean) > 3.0


def test_pnl_rejects_non_contributors(paper_config, bs_params, table):
    with pytest.raises(ValueError):
        expected_instantaneous_pnl(paper_config, bs_params, table, 100, 30, 10, seed=0)
    with pytest.raises(ValueError):
        pnl_by_age(paper_config, bs_params, table, 100, 10, seed=0)


def test_pnl_surface_layout(paper_config, bs_params, table):
    surf = pnl_surface(paper_config, bs_params, table, [0, 50], 20, seed=3)
    assert surf.estimate.shape == (90, 2)
    assert np.isfinite(surf.estimate[:40, 0]).all() and np.isnan(surf.estimate[40:, 0]).all()
    assert np.isfinite(surf.estimate[50:90, 1]).all() and np.isnan(surf.estimate[:50, 1]).all()
    assert list(surf.seeds) == [3, 4]
    assert len(list(surf.rows())) == 80


def test_nested_curves_coincide_without_volatility(paper_config, table):
    p = EconParams(stock_volatility=0.0)
    res = instantaneous_pnl_scenarios(paper_config, p, table, 20, n_outer=3, n_inner=2, seed=5)
    np.testing.assert_allclose(res.estimate, np.broadcast_to(res.estimate[0], res.estimate.shape), atol=1e-12)
    np.testing.assert_allclose(res.stderr, 0.0, atol=1e-12)


def test_lifetime_values_favour_early_generations(paper_config, bs_params, table):
    lv = lifetime_q_values(paper_config, bs_params, table, 2000, seed=2)
    mid = [lv.by_generation(g) for g in range(40, 101)]
    total = sum(e.mean for e in mid)
    cols = (lv.generations >= 40) & (lv.generations <= 100)
    se = np.sqrt(np.var(lv.samples[:, cols].sum(axis=1), ddof=1) / 2000)
    assert total + 2.0 * se < 0.0
    assert lv.by_generation(20).mean > 0.0
