"""Risk-neutral measurement of intergenerational transfers.

A contribution paid at year ``t`` buys an entitlement that is thereafter
scaled by every common indexation factor. Its pension cashflows can be
priced by following that entitlement through the fund's path of factors,
with no counterfactual fund runs. The expected instantaneous P&L of a
cohort at year ``t`` averages, over paths that use the physical drift up
to ``t`` and the pricing drift afterwards, the discounted value of those
pensions divided by the contribution, minus one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .econmodel import MIXED, PHYSICAL, PRICING, EconParams, simulate_black_scholes_paths
from .engine import FundTrace, LiabilityBasis, SchemeConfig, default_horizon, simulate_fund
from .lifetable import LifeTable
from .parallel import map_chunks

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n: int
    seed: int | None = None

    @property
    def ci95(self) -> tuple[float, float]:
        return self.mean - Z95 * self.stderr, self.mean + Z95 * self.stderr

    @classmethod
    def from_samples(cls, x: np.ndarray, seed: int | None = None) -> "Estimate":
        x = np.asarray(x, dtype=float)
        n = x.size
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(x.mean()), se, n, seed)


@dataclass(frozen=True)
class CashflowTag:
    """One attributed cashflow: generation ``generation`` pays at ``origin`` and receives at ``receipt``."""

    generation: int
    origin: int
    receipt: int
    amount: float


@dataclass
class PnLSurface:
    """Expected instantaneous P&L on a (generation, year) grid.

    ``estimate`` and ``stderr`` are NaN where a generation does not
    contribute in that year.
    """

    generations: np.ndarray
    years: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    n: int
    seeds: np.ndarray

    def rows(self):
        for iy, t in enumerate(self.years):
            for ig, g in enumerate(self.generations):
                if np.isfinite(self.estimate[ig, iy]):
                    yield int(g), int(t), float(self.estimate[ig, iy]), float(self.stderr[ig, iy]), self.n, \
                        int(self.seeds[iy])


def growth_factors(trace: FundTrace, t: int, length: int) -> np.ndarray:
    """``G[:, l] = prod_{u=t+1}^{t+l} F_u`` for ``l < length``; shape ``(n, length)``."""
    F = trace.index_factor[:, t + 1:t + length]
    G = np.ones((trace.n_paths, length))
    if F.shape[1]:
        G[:, 1:F.shape[1] + 1] = np.cumprod(F, axis=1)
    if F.shape[1] < length - 1:
        raise ValueError("trace does not extend far enough to value the accrual")
    return G


def accrual_values(trace: FundTrace, basis: LiabilityBasis, t: int, new_benefits: np.ndarray,
                   rate: float) -> np.ndarray:
    """Value at ``t`` of each slot's entitlement bought at ``t``, per member; shape ``(n, J)``.

    Pensions are discounted at the continuous rate ``rate`` and weighted by
    survival from ``t``.
    """
    D = basis.D
    length = min(D, trace.h.shape[1] - t)
    G = growth_factors(trace, t, length)
    disc = np.exp(-rate * np.arange(length))
    return new_benefits * ((G * disc) @ basis.payable[:, :length].T)


def attributed_pensions(trace: FundTrace, basis: LiabilityBasis, t: int, s: int) -> np.ndarray:
    """Per-member pension at ``s`` bought by each slot's accrual at ``t``; indexed by slot at ``t``."""
    if s < t:
        raise ValueError("receipt year precedes origin year")
    G = np.prod(trace.index_factor[:, t + 1:s + 1], axis=1)
    slots = np.arange(basis.J)
    retired_at_s = (basis.ages + (s - t)) >= basis.config.retirement_age
    alive = slots + (s - t) < basis.J
    return trace.accruals[t] * G[:, None] * (retired_at_s & alive)[None, :]


def _pnl_samples(config: SchemeConfig, params: EconParams, table: LifeTable, t: int, n: int, seed: int,
                 threads: int | None, horizon: int | None, dt: float, measure: str = MIXED):
    H = default_horizon(config, table) if horizon is None else horizon
    basis = LiabilityBasis(config, params, table, horizon=H)
    rate = params.discount_rate

    def run(a, b):
        paths = simulate_black_scholes_paths(params, H, b - a, seed, measure=measure, switch_year=t, dt=dt,
                                             first_index=a)
        tr = simulate_fund(config, params, table, paths, horizon=H, accrual_years=[t], basis=basis)
        values = accrual_values(tr, basis, t, tr.accruals[t], rate)
        return values, tr.accrual_contributions[t]

    parts = map_chunks(run, n, threads)
    values = np.concatenate([p[0] for p in parts])
    contrib = np.concatenate([p[1] for p in parts])
    return basis, values, contrib


def pnl_by_age(config: SchemeConfig, params: EconParams, table: LifeTable, t: int, n_scenarios: int, seed: int,
               threads: int | None = None, horizon: int | None = None, dt: float = 1.0) -> dict[int, Estimate]:
    """Expected instantaneous P&L for every generation contributing at year ``t``.

    Returns:
        Mapping generation -> estimate of ``value / contribution - 1``.
    """
    if not 0 <= t < config.closure_year:
        raise ValueError("no contributions are made in that year")
    basis, values, contrib = _pnl_samples(config, params, table, t, n_scenarios, seed, threads, horizon, dt)
    out = {}
    for j in range(basis.T):
        c = contrib[:, j]
        if np.all(c > 0.0):
            g = basis.T - 1 - j + t
            out[g] = Estimate.from_samples(values[:, j] / c - 1.0, seed)
    return out


def expected_instantaneous_pnl(config: SchemeConfig, params: EconParams, table: LifeTable, generation: int,
                               t: int, n_scenarios: int, seed: int, threads: int | None = None,
                               horizon: int | None = None, dt: float = 1.0) -> Estimate:
    """Expected instantaneous P&L of ``generation``'s contribution at year ``t``.

    Raises:
        ValueError: If the generation does not contribute at ``t``.
    """
    age = config.generation_age(generation, t)
    if not (config.join_age <= age < config.retirement_age) or not 0 <= t < config.closure_year:
        raise ValueError(f"generation {generation} does not contribute in year {t}")
    res = pnl_by_age(config, params, table, t, n_scenarios, seed, threads, horizon, dt)
    if generation not in res:
        raise ValueError(f"generation {generation} does not contribute in year {t}")
    return res[generation]


def pnl_surface(config: SchemeConfig, params: EconParams, table: LifeTable, years, n_scenarios: int, seed: int,
                threads: int | None = None, horizon: int | None = None) -> PnLSurface:
    """P&L surface over ``years``; year ``years[k]`` uses seed ``seed + k``."""
    years = np.asarray(list(years), dtype=int)
    T = config.career_years
    gens = np.arange(0, T - 1 + int(years.max()) + 1)
    est = np.full((gens.size, years.size), np.nan)
    se = np.full_like(est, np.nan)
    seeds = seed + np.arange(years.size)
    for k, t in enumerate(years):
        for g, e in pnl_by_age(config, params, table, int(t), n_scenarios, int(seeds[k]), threads, horizon).items():
            est[g, k] = e.mean
            se[g, k] = e.stderr
    return PnLSurface(gens, years, est, se, n_scenarios, seeds)


@dataclass
class LifetimeValues:
    """Time-0 pricing-measure value of each generation's net cashflows."""

    generations: np.ndarray
    estimates: list[Estimate]
    total: Estimate
    samples: np.ndarray = field(repr=False)

    def by_generation(self, g: int) -> Estimate:
        return self.estimates[int(np.searchsorted(self.generations, g))]


def lifetime_q_values(config: SchemeConfig, params: EconParams, table: LifeTable, n_scenarios: int, seed: int,
                      threads: int | None = None, horizon: int | None = None, dt: float = 1.0) -> LifetimeValues:
    """Pricing-measure value at 0 of pensions minus contributions, for every generation."""
    H = default_horizon(config, table) if horizon is None else horizon
    basis = LiabilityBasis(config, params, table, horizon=H)

    def run(a, b):
        paths = simulate_black_scholes_paths(params, H, b - a, seed, measure=PRICING, dt=dt, first_index=a)
        tr = simulate_fund(config, params, table, paths, horizon=H, generation_pv=True, basis=basis)
        return tr.generation_ids, tr.pv_net

    parts = map_chunks(run, n_scenarios, threads)
    gens = parts[0][0]
    x = np.concatenate([p[1] for p in parts])
    ests = [Estimate.from_samples(x[:, k], seed) for k in range(gens.size)]
    total = Estimate.from_samples(x.sum(axis=1), seed)
    return LifetimeValues(gens, ests, total, x)


def lifetime_q_value(config: SchemeConfig, params: EconParams, table: LifeTable, generation: int,
                     n_scenarios: int, seed: int, threads: int | None = None) -> Estimate:
    """Pricing-measure value at 0 of one generation's net cashflows."""
    res = lifetime_q_values(config, params, table, n_scenarios, seed, threads)
    if generation not in set(res.generations.tolist()):
        raise ValueError(f"generation {generation} never belongs to the fund")
    return res.by_generation(generation)


@dataclass
class ScenarioCurves:
    """Per-scenario P&L by contributing generation at one year (nested simulation)."""

    year: int
    generations: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    n_inner: int


def instantaneous_pnl_scenarios(config: SchemeConfig, params: EconParams, table: LifeTable, t: int, n_outer: int,
                                n_inner: int, seed: int, threads: int | None = None,
                                horizon: int | None = None) -> ScenarioCurves:
    """P&L curves for individual physical scenarios, each priced by inner pricing-measure runs.

    Outer scenario ``k`` uses streams ``(seed, 0, k)``; its inner
    continuations use ``(seed, 1, k, m)``.
    """
    if not 0 <= t < config.closure_year:
        raise ValueError("valuation year must precede closure")
    H = default_horizon(config, table) if horizon is None else horizon
    basis = LiabilityBasis(config, params, table, horizon=H)
    outer = simulate_black_scholes_paths(params, H, n_outer, seed, measure=PHYSICAL, key_prefix=(0,))
    tr = simulate_fund(config, params, table, outer, horizon=t, basis=basis)
    state = tr.final_state
    T = basis.T
    slots = [j for j in range(T) if state.contributions[0, j] > 0.0]
    gens = np.array([T - 1 - j + t for j in slots])
    est = np.zeros((n_outer, len(slots)))
    se = np.zeros_like(est)
    for k in range(n_outer):
        sk = state.select(k)

        def run(a, b, sk=sk, k=k):
            inner = simulate_black_scholes_paths(params, H, b - a, seed, measure=PRICING, first_index=a,
                                                 key_prefix=(1, k))
            itr = simulate_fund(config, params, table, inner, horizon=H, start=sk.repeat(b - a), basis=basis)
            v = accrual_values(itr, basis, t, np.repeat(sk.new_benefits, b - a, axis=0), params.discount_rate)
            return v[:, slots] / sk.contributions[0, slots] - 1.0

        x = np.concatenate(map_chunks(run, n_inner, threads))
        est[k] = x.mean(axis=0)
        se[k] = x.std(axis=0, ddof=1) / math.sqrt(n_inner) if n_inner > 1 else 0.0
    return ScenarioCurves(t, gens, est, se, n_inner)
