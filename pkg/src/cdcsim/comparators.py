"""Comparator pensions: individual DC with annuity purchase, and a pooled annuity fund.

Both comparators receive the same contributions as the CDC member
(``alpha`` of salary over the same working years) and report a per-member
nominal income stream in the same layout as the CDC engine's pension
records: an ``(n, H + 1)`` array indexed by year.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .econmodel import EconParams, InvestmentStrategy, ScenarioPath
from .lifetable import LifeTable


@dataclass(frozen=True)
class AnnuityQuote:
    """Price of one unit per year of index-linked income, paid annually in advance.

    Attributes:
        cost: Premium per unit of annual real income.
        discount_rate: Real annual rate used to discount payments.
        loading: Multiplicative charge on the fair price.
        age: Age at purchase.
    """

    cost: float
    discount_rate: float
    loading: float
    age: int

    def __post_init__(self):
        if not self.cost > 0.0:
            raise ValueError("annuity cost must be positive")
        if self.loading < 1.0:
            raise ValueError("loading must be at least 1")


def price_annuity(table: LifeTable, age: int, real_discount_rate: float, loading: float = 1.0) -> AnnuityQuote:
    """Cost ``loading * sum_l p(age, l) (1 + d)**-l`` of a whole-life annuity-due.

    Raises:
        ValueError: If ``age`` is at or beyond the terminal age.
    """
    if age >= table.terminal_age:
        raise ValueError(f"no annuity can be written at age {age} >= omega {table.terminal_age}")
    p = table.survival_curve(age)
    v = (1.0 + real_discount_rate) ** -np.arange(p.size)
    return AnnuityQuote(float(loading * (p * v).sum()), real_discount_rate, loading, age)


def real_rate(nominal: float, cpi: float) -> float:
    return (1.0 + nominal) / (1.0 + cpi) - 1.0


@dataclass(frozen=True)
class ComparatorConfig:
    """Contribution profile and investment rules shared by the comparators.

    Attributes:
        alpha: Contribution rate (normally the CDC scheme's).
        join_age: Age x at entry.
        retirement_age: Age at the first income payment.
        closure_year: Contributions stop from this year, matching the CDC scheme.
        base_salary: Salary at t = 0.
        strategy: Per-age risky proportion, applied over (a, a + 1].
        loading: Annuity charge (DC only).
        survive_to_retirement: Zero mortality before retirement.
    """

    alpha: float
    join_age: int = 25
    retirement_age: int = 65
    closure_year: int = 100
    base_salary: float = 1.0
    strategy: InvestmentStrategy | None = None
    loading: float = 1.05
    survive_to_retirement: bool = True

    @property
    def career_years(self) -> int:
        return self.retirement_age - self.join_age

    def join_year(self, generation: int) -> int:
        return generation - self.career_years + 1

    def retirement_year(self, generation: int) -> int:
        return generation + 1

    def contribution_years(self, generation: int) -> range:
        tj = self.join_year(generation)
        return range(max(tj, 0), min(tj + self.career_years, self.closure_year))

    def years_invested(self, generation: int) -> int:
        return len(self.contribution_years(generation))


def dc_config(alpha: float, join_age: int = 25, retirement_age: int = 65, taper_years: int = 10,
              **kw) -> ComparatorConfig:
    """DC lifestyling: all risky until ``taper_years`` before retirement, then linear to zero."""
    strat = InvestmentStrategy.lifestyle(retirement_age - taper_years, retirement_age, 1.0, 0.0, 0, 121)
    return ComparatorConfig(alpha, join_age, retirement_age, strategy=strat, **kw)


def pooled_config(alpha: float, join_age: int = 25, retirement_age: int = 65, taper_years: int = 10,
                  floor: float = 0.33, **kw) -> ComparatorConfig:
    """Pooled fund: all risky until ``taper_years`` before retirement, then linear to ``floor``."""
    strat = InvestmentStrategy.lifestyle(retirement_age - taper_years, retirement_age, 1.0, floor, 0, 121)
    kw.setdefault("loading", 1.0)
    return ComparatorConfig(alpha, join_age, retirement_age, strategy=strat, **kw)


def _effective_table(cfg: ComparatorConfig, table: LifeTable) -> LifeTable:
    return table.with_certain_survival_below(cfg.retirement_age) if cfg.survive_to_retirement else table


def accumulate_pot(cfg: ComparatorConfig, path: ScenarioPath, generation: int) -> np.ndarray:
    """Pot per member at the retirement year, after the final year's growth."""
    tr = cfg.retirement_year(generation)
    if tr > path.horizon:
        raise ValueError("path does not reach the generation's retirement")
    pot = np.zeros(path.n_paths)
    years = set(cfg.contribution_years(generation))
    for t in range(max(cfg.join_year(generation), 0), tr):
        if t in years:
            pot = pot + cfg.alpha * cfg.base_salary * path.wage_index[:, t]
        age = cfg.retirement_age - 1 - generation + t
        pi = cfg.strategy.proportion(age)
        pot = pot * (1.0 + pi * path.stock_return[:, t + 1] + (1.0 - pi) * path.bond_return[:, t + 1])
    return pot


def simulate_dc_annuity(cfg: ComparatorConfig, path: ScenarioPath, table: LifeTable, params: EconParams,
                        generation: int) -> np.ndarray:
    """Nominal income per surviving member of ``generation`` in each year.

    The pot buys a loaded, index-linked annuity at retirement priced at the
    real bond rate; income is then constant in real terms.
    """
    tr = cfg.retirement_year(generation)
    pot = accumulate_pot(cfg, path, generation)
    eff = _effective_table(cfg, table)
    quote = price_annuity(eff, cfg.retirement_age, real_rate(params.bond_growth, params.cpi), cfg.loading)
    income0 = pot / quote.cost
    cpi_index = path.cpi_index
    out = np.zeros((path.n_paths, path.horizon + 1))
    last = min(tr + eff.terminal_age - cfg.retirement_age, path.horizon + 1)
    out[:, tr:last] = income0[:, None] * cpi_index[:, tr:last] / cpi_index[:, [tr]]
    return out


def simulate_pooled_annuity(cfg: ComparatorConfig, path: ScenarioPath, table: LifeTable, params: EconParams,
                            generation: int) -> np.ndarray:
    """Nominal income per surviving member of a single-generation pooled annuity fund.

    Each retirement year the fund pays each survivor its share of assets
    divided by an unloaded real annuity factor at the year's expected
    portfolio return. Assets of those who die pass to the survivors.
    """
    tr = cfg.retirement_year(generation)
    per_member = accumulate_pot(cfg, path, generation)
    eff = _effective_table(cfg, table)
    out = np.zeros((path.n_paths, path.horizon + 1))
    for t in range(tr, path.horizon + 1):
        age = cfg.retirement_age + t - tr
        if age >= eff.terminal_age:
            break
        pi = cfg.strategy.proportion(age)
        expected = pi * params.stock_growth + (1.0 - pi) * params.bond_growth
        factor = price_annuity(eff, age, real_rate(expected, params.cpi), 1.0).cost
        pay = per_member / factor
        out[:, t] = pay
        per_member = per_member - pay
        if t + 1 <= path.horizon:
            growth = 1.0 + pi * path.stock_return[:, t + 1] + (1.0 - pi) * path.bond_return[:, t + 1]
            p1 = eff.survival_probability(age, 1)
            per_member = per_member * growth / p1 if p1 > 0.0 else np.zeros_like(per_member)
    return out
