"""Replacement ratios, fan-chart deciles and scheme comparisons.

Scenario-level results are reduced with order-independent operations
(``math.fsum`` and sorting-based quantiles), so aggregates do not depend
on how scenarios were distributed across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .comparators import dc_config, pooled_config, simulate_dc_annuity, simulate_pooled_annuity
from .econmodel import PHYSICAL, EconParams, ScenarioPath, constant_path, simulate_black_scholes_paths
from .engine import MULTI_EMPLOYER, SchemeConfig, derive_multi_employer_strategy, simulate_fund
from .lifetable import LifeTable
from .parallel import map_chunks

DECILES = np.arange(10, 100, 10)
SCHEMES = ("single_employer", "multi_employer", "dc_annuity", "pooled_annuity")


@dataclass
class IncomeTrace:
    """Real retirement income of one generation across scenarios.

    Attributes:
        generation: Generation id.
        ages: Retirement ages covered, ``retirement_age .. omega - 1``.
        real_income: Per-member income deflated to t = 0 money, ``(n, len(ages))``.
        final_salary: Real salary in the last working year, ``(n,)``.
    """

    generation: int
    ages: np.ndarray
    real_income: np.ndarray
    final_salary: np.ndarray

    def __post_init__(self):
        self.real_income = np.atleast_2d(np.asarray(self.real_income, dtype=float))
        self.final_salary = np.atleast_1d(np.asarray(self.final_salary, dtype=float))
        if np.any(self.real_income < 0.0):
            raise ValueError("real income must be non-negative")


def income_trace(nominal: np.ndarray, path: ScenarioPath, generation: int, retirement_age: int,
                 terminal_age: int, base_salary: float = 1.0) -> IncomeTrace:
    """Deflate a generation's nominal income stream and pair it with its final salary."""
    tr = generation + 1
    n_years = terminal_age - retirement_age
    if tr + n_years - 1 > path.horizon:
        raise ValueError("path does not cover the generation's retirement")
    cpi = path.cpi_index
    cols = slice(tr, tr + n_years)
    real = np.atleast_2d(nominal)[:, cols] / cpi[:, cols]
    final = base_salary * path.wage_index[:, tr - 1] / cpi[:, tr - 1]
    return IncomeTrace(generation, np.arange(retirement_age, terminal_age), real, final)


def replacement_ratio(trace: IncomeTrace) -> np.ndarray:
    """Real income over real final salary for each retirement age; shape ``(n, ages)``.

    Raises:
        ValueError: If a final salary is not positive.
    """
    if np.any(trace.final_salary <= 0.0):
        raise ValueError("final salary must be positive")
    return trace.real_income / trace.final_salary[:, None]


def lifetime_mean_replacement_ratio(trace: IncomeTrace, years_invested: int, career_years: int | None = None,
                                    weights: np.ndarray | None = None, normalize: bool = False) -> np.ndarray:
    """Mean replacement ratio over retirement, per scenario.

    By default the mean is scaled by ``years_invested / career_years``.
    With ``normalize=True`` it is divided by that fraction instead, which
    expresses a part-career pension as a full-career equivalent.
    ``weights`` (for example survival probabilities by age) replace the
    unweighted mean.
    """
    if years_invested <= 0:
        raise ValueError("years_invested must be positive")
    T = years_invested if career_years is None else career_years
    rr = replacement_ratio(trace)
    if weights is None:
        m = rr.mean(axis=1)
    else:
        w = np.asarray(weights, dtype=float)
        m = rr @ w / w.sum()
    frac = years_invested / T
    return m / frac if normalize else m * frac


@dataclass
class FanGrid:
    """Nine deciles per year plus one example scenario."""

    years: np.ndarray
    deciles: np.ndarray
    example: np.ndarray
    example_index: int = 0


def fan_deciles(samples: np.ndarray, years: np.ndarray | None = None, example_index: int = 0) -> FanGrid:
    """Deciles 10%..90% across scenarios (rows) for every year (column).

    Quantiles interpolate linearly between order statistics.

    Raises:
        ValueError: With fewer than 10 scenarios.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    if x.shape[0] < 10:
        raise ValueError("need at least 10 samples per year")
    years = np.arange(x.shape[1]) if years is None else np.asarray(years)
    d = np.percentile(x, DECILES, axis=0, method="linear")
    return FanGrid(years, d, x[example_index].copy(), example_index)


def stable_mean(x) -> float:
    """Exactly rounded mean; identical for any ordering of ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    return math.fsum(x) / x.size


@dataclass
class GenerationSummary:
    generation: int
    median: float
    mean: float
    n: int


def summarize(values: np.ndarray, generation: int) -> GenerationSummary:
    return GenerationSummary(generation, float(np.median(values)), stable_mean(values), int(np.asarray(values).size))


# -- scheme comparison ------------------------------------------------------------

def scheme_incomes(single: SchemeConfig, params: EconParams, table: LifeTable, paths: ScenarioPath,
                   generations, schemes=SCHEMES, multi_strategy=None) -> dict[str, dict[int, np.ndarray]]:
    """Nominal per-member income of each generation under each scheme, on shared paths.

    Args:
        single: Calibrated single-employer configuration; the other schemes
            reuse its contribution rate, ages and closure year.
        params: Central-estimate assumptions the schemes use.
        paths: Realized scenarios.
        multi_strategy: Per-time strategy for the multi-employer scheme
            (derived from ``single`` when omitted).
    """
    gens = list(generations)
    out: dict[str, dict[int, np.ndarray]] = {}
    if "single_employer" in schemes:
        tr = simulate_fund(single, params, table, paths, generations=gens)
        out["single_employer"] = tr.incomes
    if "multi_employer" in schemes:
        strat = multi_strategy or derive_multi_employer_strategy(single, params, table)
        multi = replace(single, kind=MULTI_EMPLOYER, strategy=strat)
        tr = simulate_fund(multi, params, table, paths, generations=gens)
        out["multi_employer"] = tr.incomes
    common = dict(join_age=single.join_age, retirement_age=single.retirement_age,
                  closure_year=single.closure_year, base_salary=single.base_salary,
                  survive_to_retirement=single.survive_to_retirement)
    if "dc_annuity" in schemes:
        c = dc_config(single.alpha, **common)
        out["dc_annuity"] = {g: simulate_dc_annuity(c, paths, table, params, g) for g in gens}
    if "pooled_annuity" in schemes:
        c = pooled_config(single.alpha, **common)
        out["pooled_annuity"] = {g: simulate_pooled_annuity(c, paths, table, params, g) for g in gens}
    return out


def years_invested(config: SchemeConfig, generation: int) -> int:
    tj = generation - config.career_years + 1
    return len(range(max(tj, 0), min(tj + config.career_years, config.closure_year)))


@dataclass
class ComparisonResult:
    """Per-scenario lifetime-mean replacement ratios by scheme and generation."""

    generations: list[int]
    lifetime_means: dict[str, dict[int, np.ndarray]]
    n: int
    seed: int

    def median(self, scheme: str, generation: int) -> float:
        return float(np.median(self.lifetime_means[scheme][generation]))

    def summaries(self, scheme: str) -> list[GenerationSummary]:
        return [summarize(self.lifetime_means[scheme][g], g) for g in self.generations]


def compare_schemes(single: SchemeConfig, params: EconParams, table: LifeTable, n_scenarios: int, seed: int,
                    generations=(60,), schemes=SCHEMES, threads: int | None = None, normalize: bool = False,
                    path_params: EconParams | None = None) -> ComparisonResult:
    """Lifetime-mean replacement ratios of several schemes on shared Black-Scholes paths.

    ``path_params`` generates the scenarios (e.g. with a shifted drift)
    while ``params`` stays the schemes' central estimate.
    """
    gens = list(generations)
    path_params = params if path_params is None else path_params
    omega = table.terminal_age
    H = max(max(gens) + 1 + omega - single.retirement_age, single.closure_year + 1)
    strat = derive_multi_employer_strategy(single, params, table) if "multi_employer" in schemes else None

    def run(a, b):
        paths = simulate_black_scholes_paths(path_params, H, b - a, seed, measure=PHYSICAL, first_index=a)
        inc = scheme_incomes(single, params, table, paths, gens, schemes, multi_strategy=strat)
        res = {}
        for s, by_gen in inc.items():
            res[s] = {}
            for g in gens:
                tr = income_trace(by_gen[g], paths, g, single.retirement_age, omega, single.base_salary)
                res[s][g] = lifetime_mean_replacement_ratio(tr, years_invested(single, g), single.career_years,
                                                            normalize=normalize)
        return res

    parts = map_chunks(run, n_scenarios, threads)
    merged = {s: {g: np.concatenate([p[s][g] for p in parts]) for g in gens} for s in parts[0]}
    return ComparisonResult(gens, merged, n_scenarios, seed)


def shifted_return_experiment(config: SchemeConfig, params: EconParams, table: LifeTable, shift: float,
                              n_scenarios: int, seed: int, generations=None, threads: int | None = None,
                              normalize: bool = False) -> dict[int, float]:
    """Median lifetime-mean ratio per generation when realized stock drift is shifted.

    The scheme keeps its central estimates at ``params``; only the
    simulated physical drift moves by ``shift`` (e.g. +/-0.01).
    """
    if generations is None:
        generations = range(0, config.career_years - 1 + config.closure_year)
    gens = list(generations)
    omega = table.terminal_age
    H = max(gens) + 1 + omega - config.retirement_age
    shifted = replace(params, stock_drift_shift=params.stock_drift_shift + shift)

    def run(a, b):
        paths = simulate_black_scholes_paths(shifted, H, b - a, seed, measure=PHYSICAL, first_index=a)
        tr = simulate_fund(config, params, table, paths, generations=gens)
        res = {}
        for g in gens:
            it = income_trace(tr.incomes[g], paths, g, config.retirement_age, omega, config.base_salary)
            res[g] = lifetime_mean_replacement_ratio(it, years_invested(config, g), config.career_years,
                                                     normalize=normalize)
        return res

    parts = map_chunks(run, n_scenarios, threads)
    return {g: float(np.median(np.concatenate([p[g] for p in parts]))) for g in gens}


def constant_model_ratios(single: SchemeConfig, params: EconParams, table: LifeTable, generation: int = 60,
                          dc_taper: int = 10) -> dict[str, float]:
    """Lifetime-mean replacement ratios of the CDC fund and of DC with annuity in the constant model.

    DC receives the CDC contribution rate and de-risks linearly over the
    ``dc_taper`` years before retirement.
    """
    g = generation
    omega = table.terminal_age
    H = max(g + 1 + omega - single.retirement_age, single.closure_year + 1)
    path = constant_path(params, H)
    tr = simulate_fund(single, params, table, path, generations=[g])
    dc = dc_config(single.alpha, single.join_age, single.retirement_age, dc_taper,
                   closure_year=single.closure_year, base_salary=single.base_salary,
                   survive_to_retirement=single.survive_to_retirement)
    out = {}
    for name, nominal in (("cdc", tr.incomes[g]), ("dc", simulate_dc_annuity(dc, path, table, params, g))):
        it = income_trace(nominal, path, g, single.retirement_age, omega, single.base_salary)
        out[name] = float(lifetime_mean_replacement_ratio(it, years_invested(single, g), single.career_years)[0])
    return out
