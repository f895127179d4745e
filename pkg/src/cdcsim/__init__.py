"""Simulation and valuation of shared-indexation CDC pension schemes."""

from .econmodel import (TABLE1, EconParams, InvestmentStrategy, ScenarioPath, constant_path,
                        discount_factor, increment_factor, project_cpi, simulate_black_scholes_path,
                        simulate_black_scholes_paths)
from .engine import (MULTI_EMPLOYER, SINGLE_EMPLOYER, FundState, FundTrace, IndexationOutcome,
                     LiabilityBasis, Regime, SchemeConfig, derive_multi_employer_strategy, simulate_fund,
                     solve_indexation, step_fund)
from .lifetable import LifeTable, bundled_table, load_life_table, make_exponential_table, survival_probability
from .steadystate import (recursive_steady_state, solve_contribution_rate_prop1,
                          solve_contribution_rate_recursive)

__version__ = "0.1.0"
