"""Year-by-year evolution of a CDC fund.

The fund is tracked by age slot ``j = age - join_age`` and vectorised over
a batch of scenarios: benefit arrays have shape ``(n, J)`` with
``J = omega - join_age``. Survivor proportions are deterministic
(infinite-fund convention) and shared by every scenario.

Each year the central-estimate liability of the benefits carried in from
last year is a polynomial in ``y = (1 + i)(1 + h)``::

    L(y) = sum_j W_j sum_l K[j, l] y**(l + 1),   W_j = N_j B_j,

where ``K[j, l] = P(l) p(a_j, l) 1[a_j + l >= retirement]``. The term
``l = 0`` is this year's pension after indexation, so the pension paid
equals the freshly indexed entitlement. Every coefficient is
non-negative, hence ``L`` is increasing and convex for ``y > 0`` and the
balancing ``y`` is unique.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .econmodel import EconParams, InvestmentStrategy, ScenarioPath
from .lifetable import LifeTable

SINGLE_EMPLOYER = "single_employer"
MULTI_EMPLOYER = "multi_employer"


class Regime(enum.IntEnum):
    NONE = -1
    INTERIOR = 0
    CAPPED_BONUS = 1
    FLOORED_CUT = 2


REGIME_NAMES = {r.value: r.name.lower() for r in Regime}


class SolverError(RuntimeError):
    """Indexation could not be solved for the given fund position."""


@dataclass(frozen=True)
class SchemeConfig:
    """Contract parameters of a CDC scheme.

    Attributes:
        kind: ``"single_employer"`` or ``"multi_employer"``.
        alpha: Contribution as a fraction of salary.
        beta: Benefit divisor; single-employer accrual is ``S / beta``.
        h_plus: Cap on real indexation h. Excess funding is paid as a bonus.
        nominal_floor: Minimum nominal indexation. Shortfalls below it are
            met by a benefit cut.
        target_h: Indexation the single-employer contribution rate targets.
        h0: Indexation used to price multi-employer accruals at t = 0.
        join_age: Age at entry, x.
        retirement_age: Age of the first pension payment, x + T.
        closure_year: First year with no new entrants or contributions.
        base_salary: Salary S_0 at t = 0.
        strategy: Investment strategy. Per-age strategies are combined by
            liability weight; per-time strategies apply to the whole fund.
        survive_to_retirement: Override mortality to zero before retirement.
    """

    kind: str = SINGLE_EMPLOYER
    alpha: float = 0.0634
    beta: float = 80.0
    h_plus: float = 0.05
    nominal_floor: float = 0.0
    target_h: float = 0.0
    h0: float = 0.0
    join_age: int = 25
    retirement_age: int = 65
    closure_year: int = 100
    base_salary: float = 1.0
    strategy: InvestmentStrategy = field(
        default_factory=lambda: InvestmentStrategy.lifestyle(65, 85, min_age=0, max_age=121))
    survive_to_retirement: bool = True

    def __post_init__(self):
        if self.kind not in (SINGLE_EMPLOYER, MULTI_EMPLOYER):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not self.join_age < self.retirement_age:
            raise ValueError("join_age must be below retirement_age")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        if self.closure_year < 1:
            raise ValueError("closure_year must be at least 1")
        if self.base_salary <= 0.0:
            raise ValueError("base_salary must be positive")

    @property
    def career_years(self) -> int:
        """T, the number of contributing years."""
        return self.retirement_age - self.join_age

    @property
    def max_entry_age(self) -> int:
        """X = x + T - 1, the oldest contributing age."""
        return self.retirement_age - 1

    def generation_age(self, generation: int, t: int) -> int:
        """Age of generation ``generation`` at year ``t``."""
        return self.max_entry_age - generation + t

    def generation_join_year(self, generation: int) -> int:
        return generation - self.career_years + 1

    def generation_retirement_year(self, generation: int) -> int:
        return generation + 1


@dataclass
class IndexationOutcome:
    """Solved indexation for a batch of scenarios (arrays of shape ``(n,)``)."""

    h: np.ndarray
    theta: np.ndarray
    h_nominal: np.ndarray
    regime: np.ndarray

    @property
    def factor_projected(self) -> np.ndarray:
        return (1.0 + self.h_nominal) * self.theta


class LiabilityBasis:
    """Survival, discount and indexation data shared by every scenario.

    Args:
        config: Scheme contract.
        params: Central-estimate economic assumptions.
        table: Mortality. Must cover ``join_age``.
        horizon: Last simulated year (bounds per-time discount curves).
    """

    def __init__(self, config: SchemeConfig, params: EconParams, table: LifeTable,
                 horizon: int | None = None):
        if table.min_age > config.join_age:
            raise ValueError("life table does not cover the join age")
        if config.retirement_age > table.terminal_age:
            raise ValueError("retirement age is beyond the table's terminal age")
        eff = table.truncated(config.join_age)
        if config.survive_to_retirement:
            eff = eff.with_certain_survival_below(config.retirement_age)
        self.config = config
        self.params = params
        self.table = eff
        self.x = config.join_age
        self.omega = eff.terminal_age
        self.J = self.omega - self.x
        self.D = self.J
        self.T = config.career_years
        self.cpi = params.cpi
        self.horizon = (config.closure_year + self.J) if horizon is None else int(horizon)
        self.ages = np.arange(self.x, self.omega)
        self.retired = self.ages >= config.retirement_age
        self.one_year_survival = 1.0 - eff.q
        # N of an entrant after j years.
        self.entry_survival = np.concatenate([[1.0], np.cumprod(self.one_year_survival)[:-1]])

        ell = np.arange(self.D)
        logp = np.concatenate([[0.0], np.cumsum(np.log(np.maximum(self.one_year_survival, 1e-300)))])
        j = np.arange(self.J)[:, None]
        end = j + ell[None, :]
        alive = end < self.J
        endc = np.minimum(end, self.J)
        # a certain death inside the window must give exactly zero, not exp(-690)
        deaths = np.concatenate([[0], np.cumsum(self.one_year_survival == 0.0)])
        alive &= deaths[endc] == deaths[j]
        surv = np.where(alive, np.exp(logp[endc] - logp[j]), 0.0)
        self.survival = surv
        self.payable = surv * ((self.ages[:, None] + ell[None, :]) >= config.retirement_age)

        strat = config.strategy
        if strat.kind == "age":
            pi = strat.proportion(np.arange(self.x, self.omega + self.D))
            r = pi * params.stock_growth + (1.0 - pi) * params.bond_growth
            c = np.concatenate([[0.0], np.cumsum(np.log1p(r))])
            disc = np.exp(-(c[end] - c[j]))
            self._age_pi = pi[: self.J]
            self._K_static = self.payable * disc
            if config.kind == MULTI_EMPLOYER and np.ptp(strat.values) > 0.0:
                raise ValueError("multi-employer schemes need a per-time (or constant) strategy")
        else:
            pi = strat.proportion(np.arange(0, self.horizon + self.D + 2))
            r = pi * params.stock_growth + (1.0 - pi) * params.bond_growth
            self._time_pi = pi
            self._time_c = np.concatenate([[0.0], np.cumsum(np.log1p(r))])
            self._K_static = None
        self._K_cache: dict[int, np.ndarray] = {}

    @property
    def age_based(self) -> bool:
        return self._K_static is not None

    def K(self, t: int) -> np.ndarray:
        """Liability coefficients ``(J, D)`` for year ``t``."""
        if self._K_static is not None:
            return self._K_static
        k = self._K_cache.get(t)
        if k is None:
            if t + self.D >= self._time_c.size:
                raise ValueError(f"year {t} is beyond the basis horizon")
            c = self._time_c
            disc = np.exp(-(c[t:t + self.D] - c[t]))
            k = self.payable * disc[None, :]
            if len(self._K_cache) > 512:
                self._K_cache.clear()
            self._K_cache[t] = k
        return k

    def risky_by_age(self) -> np.ndarray:
        return self._age_pi

    def time_proportion(self, t: int) -> float:
        return float(self._time_pi[min(t, self._time_pi.size - 1)])

    def y_cap(self) -> float:
        return (1.0 + self.cpi) * (1.0 + self.config.h_plus)

    def y_floor(self) -> float:
        return 1.0 + self.config.nominal_floor


@dataclass
class OpeningState:
    """Fund position at year ``t`` after ageing and investment return, before solving.

    Attributes:
        year: t.
        benefits: B^cum_{t-1} in the slots members occupy at t, shape (n, J).
        survivors: N_t per slot, shape (J,).
        assets_pre: A_{t-}, shape (n,).
    """

    year: int
    benefits: np.ndarray
    survivors: np.ndarray
    assets_pre: np.ndarray


@dataclass
class FundState:
    """Fund position after this year's payments (year ``t`` post state).

    Per-member quantities are stored by age slot; multiply by
    ``survivors`` for cohort totals.
    """

    year: int
    benefits: np.ndarray
    survivors: np.ndarray
    assets_pre: np.ndarray
    assets_post: np.ndarray
    outcome: IndexationOutcome
    index_factor: np.ndarray
    risky_proportion: np.ndarray
    contributions: np.ndarray
    new_benefits: np.ndarray
    pensions: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.benefits.shape[0]

    @property
    def total_contributions(self) -> np.ndarray:
        return self.contributions @ self.survivors

    @property
    def total_pensions(self) -> np.ndarray:
        return self.pensions @ self.survivors

    def repeat(self, n: int) -> "FundState":
        """Replicate a single-scenario state ``n`` times (nested simulation)."""
        if self.n_paths != 1:
            raise ValueError("repeat expects a single-scenario state")
        rep = lambda a: np.repeat(a, n, axis=0)
        out = IndexationOutcome(*(rep(getattr(self.outcome, f)) for f in ("h", "theta", "h_nominal", "regime")))
        return FundState(self.year, rep(self.benefits), self.survivors, rep(self.assets_pre),
                         rep(self.assets_post), out, rep(self.index_factor), rep(self.risky_proportion),
                         rep(self.contributions), rep(self.new_benefits), rep(self.pensions))

    def select(self, k: int) -> "FundState":
        sl = slice(k, k + 1)
        out = IndexationOutcome(*(getattr(self.outcome, f)[sl] for f in ("h", "theta", "h_nominal", "regime")))
        return FundState(self.year, self.benefits[sl], self.survivors, self.assets_pre[sl],
                         self.assets_post[sl], out, self.index_factor[sl], self.risky_proportion[sl],
                         self.contributions[sl], self.new_benefits[sl], self.pensions[sl])


# -- liability polynomials ---------------------------------------------------

def _horner(d: np.ndarray, y: np.ndarray, deriv: bool = False):
    """Evaluate sum_m d[:, m] y**(m+1) and optionally its derivative."""
    p = np.zeros_like(y)
    dp = np.zeros_like(y)
    for m in range(d.shape[1] - 1, -1, -1):
        if deriv:
            dp = dp * y + p
        p = p * y + d[:, m]
    if not deriv:
        return p * y
    return p * y, dp * y + p


def liability_coefficients(benefits: np.ndarray, survivors: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Polynomial coefficients ``(n, D)`` of the pre-payment liability."""
    d = (benefits * survivors[None, :]) @ K
    # trailing all-zero columns cost Horner steps without changing the value
    nz = np.flatnonzero(np.any(d != 0.0, axis=0))
    return d[:, : (nz[-1] + 1 if nz.size else 1)]


def liability_value(benefits: np.ndarray, survivors: np.ndarray, K: np.ndarray, y) -> np.ndarray:
    """Pre-payment central-estimate liability at ``y = 1 + h^n``."""
    d = liability_coefficients(benefits, survivors, K)
    y = np.broadcast_to(np.asarray(y, dtype=float), (d.shape[0],)).copy()
    return _horner(d, y)


def solve_balance(d: np.ndarray, assets: np.ndarray, lo: float, hi: float,
                  rtol: float = 1e-15, max_iter: int = 100) -> np.ndarray:
    """Root of ``L(y) = assets`` on ``[lo, hi]`` for every row.

    Newton's method started at ``hi`` decreases monotonically onto the root
    of an increasing convex function, so no bracketing steps are needed;
    iterates are clipped to ``lo`` as a safeguard. Rows must satisfy
    ``L(lo) <= assets <= L(hi)``.
    """
    y = np.full(assets.shape, hi, dtype=float)
    active = np.ones(assets.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f, df = _horner(d[idx], y[idx], deriv=True)
        f = f - assets[idx]
        step = np.where(df > 0.0, f / np.where(df > 0.0, df, 1.0), 0.0)
        ynew = np.maximum(y[idx] - step, lo)
        done = (np.abs(f) <= rtol * np.maximum(assets[idx], 1e-300)) | (np.abs(ynew - y[idx]) <= 4e-16 * y[idx])
        y[idx] = ynew
        active[idx[done]] = False
    return y


def _solve(d: np.ndarray, assets: np.ndarray, basis: LiabilityBasis) -> IndexationOutcome:
    n = assets.shape[0]
    if np.any(assets < 0.0):
        raise SolverError("assets before indexation are negative")
    zero_liab = ~np.any(d > 0.0, axis=1)
    if np.any(zero_liab & (assets > 0.0)):
        raise SolverError("positive assets but no liabilities to index")
    i = basis.cpi
    y_cap, y_floor = basis.y_cap(), basis.y_floor()
    if y_floor > y_cap + 1e-15:
        raise SolverError("nominal floor lies above the indexation cap")
    ones = np.ones(n)
    L_cap = _horner(d, y_cap * ones)
    L_floor = _horner(d, y_floor * ones)
    capped = assets > L_cap
    floored = (assets < L_floor) & ~capped
    interior = ~(capped | floored)
    y = np.empty(n)
    theta = np.ones(n)
    regime = np.full(n, int(Regime.INTERIOR))
    y[capped] = y_cap
    theta[capped] = assets[capped] / L_cap[capped]
    regime[capped] = Regime.CAPPED_BONUS
    y[floored] = y_floor
    theta[floored] = assets[floored] / L_floor[floored]
    regime[floored] = Regime.FLOORED_CUT
    if interior.any():
        idx = np.flatnonzero(interior)
        y[idx] = solve_balance(d[idx], assets[idx], y_floor, y_cap)
    h = y / (1.0 + i) - 1.0
    h[capped] = basis.config.h_plus
    h[zero_liab] = basis.config.target_h
    regime[zero_liab] = Regime.NONE
    theta[zero_liab] = 1.0
    return IndexationOutcome(h=h, theta=theta, h_nominal=(1.0 + i) * (1.0 + h) - 1.0, regime=regime)


def solve_indexation(opening: OpeningState, basis: LiabilityBasis) -> IndexationOutcome:
    """Solve the prevailing indexation and any bonus or cut.

    The liability of last year's entitlements is matched to ``A_{t-}``. If
    the matching real indexation exceeds the cap, ``h = h_plus`` and the
    surplus is paid as a one-off multiplier ``theta > 1``. If the matching
    nominal indexation is below the floor, nominal indexation is set to the
    floor and ``theta < 1`` cuts benefits.

    Raises:
        SolverError: If assets are positive while no liability exists, or
            assets are negative.
    """
    K = basis.K(opening.year)
    d = liability_coefficients(opening.benefits, opening.survivors, K)
    return _solve(d, np.asarray(opening.assets_pre, dtype=float), basis)


def apply_indexation(benefits: np.ndarray, outcome: IndexationOutcome, cpi_realized) -> tuple[np.ndarray, np.ndarray]:
    """Scale every entitlement by ``(1 + i_t)(1 + h_t) theta_t``.

    Returns:
        The indexed entitlements and the per-scenario factor.
    """
    factor = (1.0 + np.asarray(cpi_realized)) * (1.0 + outcome.h) * outcome.theta
    return benefits * factor[:, None], factor


def accrue_single_employer(salary, config: SchemeConfig, contributing: bool = True):
    """Contribution ``alpha S`` and accrual ``S / beta`` for one member."""
    if not contributing:
        return 0.0 * salary, 0.0 * salary
    return config.alpha * salary, salary / config.beta


def annuity_factors(basis: LiabilityBasis, t: int, y: np.ndarray) -> np.ndarray:
    """Central-estimate value ``(n, J)`` of one unit of entitlement bought at t."""
    K = basis.K(t)
    powers = np.power.outer(np.asarray(y, dtype=float), np.arange(basis.D))
    return powers @ K.T


def price_multi_employer_benefit(contribution, slot: int, basis: LiabilityBasis, t: int, h) -> np.ndarray:
    """Entitlement bought by ``contribution`` for the member in ``slot`` at year ``t``.

    Raises:
        ValueError: If the member has no future payable pensions.
    """
    y = (1.0 + basis.cpi) * (1.0 + np.atleast_1d(np.asarray(h, dtype=float)))
    f = annuity_factors(basis, t, y)[:, slot]
    if np.any(f <= 0.0):
        raise ValueError(f"slot {slot} has a zero annuity factor")
    return np.asarray(contribution) / f


def post_payment_liabilities(benefits: np.ndarray, survivors: np.ndarray, basis: LiabilityBasis,
                             t: int, y: np.ndarray) -> np.ndarray:
    """Liability ``(n, J)`` of future pensions (l >= 1) per age slot at ``y``."""
    K = basis.K(t)
    powers = np.power.outer(np.asarray(y, dtype=float), np.arange(1, basis.D))
    return benefits * survivors[None, :] * (powers @ K[:, 1:].T)


def aggregate_risky_proportion(benefits: np.ndarray, survivors: np.ndarray, basis: LiabilityBasis,
                               t: int, h) -> np.ndarray:
    """Liability-weighted risky proportion of a per-age strategy.

    Raises:
        ValueError: If total liability is zero in some scenario.
    """
    y = (1.0 + basis.cpi) * (1.0 + np.atleast_1d(np.asarray(h, dtype=float)))
    w = post_payment_liabilities(benefits, survivors, basis, t, y)
    tot = w.sum(axis=1)
    if np.any(tot <= 0.0):
        raise ValueError("zero total liability")
    return (w @ basis.risky_by_age()) / tot


def _fund_proportion(benefits, survivors, basis, t, h) -> np.ndarray:
    n = benefits.shape[0]
    if not basis.age_based:
        return np.full(n, basis.time_proportion(t))
    y = (1.0 + basis.cpi) * (1.0 + h)
    w = post_payment_liabilities(benefits, survivors, basis, t, y)
    tot = w.sum(axis=1)
    pi = basis.risky_by_age()
    out = np.empty(n)
    ok = tot > 0.0
    out[ok] = (w[ok] @ pi) / tot[ok]
    # empty fund: hold whatever the oldest slot would hold
    out[~ok] = pi[-1]
    return out


def settle(opening: OpeningState, basis: LiabilityBasis, salary: np.ndarray, cpi_realized,
           outcome: IndexationOutcome | None = None) -> FundState:
    """Solve (unless ``outcome`` given), index, accrue, pay and record year t."""
    cfg = basis.config
    t = opening.year
    n = opening.benefits.shape[0]
    N = opening.survivors
    if outcome is None:
        outcome = solve_indexation(opening, basis)
    B, factor = apply_indexation(opening.benefits, outcome, cpi_realized)

    contributing = (np.arange(basis.J) < basis.T) & (N > 0.0) & (t < cfg.closure_year)
    contrib = np.zeros((n, basis.J))
    new = np.zeros((n, basis.J))
    if contributing.any():
        S = np.asarray(salary, dtype=float).reshape(-1)[:, None] * cfg.base_salary
        contrib[:, contributing] = cfg.alpha * S
        if cfg.kind == SINGLE_EMPLOYER:
            new[:, contributing] = S / cfg.beta
        else:
            y = 1.0 + outcome.h_nominal
            f = annuity_factors(basis, t, y)[:, contributing]
            if np.any(f <= 0.0):
                raise SolverError("contributing member with zero annuity factor")
            new[:, contributing] = contrib[:, contributing] / f
    B = B + new
    pensions = np.where(basis.retired[None, :] & (N[None, :] > 0.0), B, 0.0)
    c_tot = contrib @ N
    p_tot = pensions @ N
    assets_post = opening.assets_pre + c_tot - p_tot
    pi = _fund_proportion(B, N, basis, t, outcome.h)
    return FundState(t, B, N, np.asarray(opening.assets_pre, dtype=float), assets_post, outcome, factor,
                     pi, contrib, new, pensions)


def roll_forward(state: FundState, basis: LiabilityBasis, stock_return, bond_return) -> OpeningState:
    """Age members by one year and grow assets over (t, t+1]."""
    cfg = basis.config
    t = state.year + 1
    r = state.risky_proportion * np.asarray(stock_return) + (1.0 - state.risky_proportion) * np.asarray(bond_return)
    assets = state.assets_post * (1.0 + r)
    N = np.zeros(basis.J)
    N[1:] = state.survivors[:-1] * basis.one_year_survival[:-1]
    N[0] = 1.0 if t < cfg.closure_year else 0.0
    B = np.zeros_like(state.benefits)
    B[:, 1:] = state.benefits[:, :-1]
    B[:, N == 0.0] = 0.0
    return OpeningState(t, B, N, assets)


def step_fund(state: FundState, basis: LiabilityBasis, stock_return, bond_return, cpi_realized,
              salary) -> FundState:
    """Advance the fund from year t-1 (post) to year t (post).

    Args:
        state: Post-payment state for year t-1.
        basis: Shared liability data.
        stock_return, bond_return: Realized returns over (t-1, t].
        cpi_realized: Realized CPI over (t-1, t].
        salary: Wage index at t (multiplied by the configured base salary).
    """
    opening = roll_forward(state, basis, stock_return, bond_return)
    if not np.any(opening.survivors > 0.0):
        # every member has died; assets just roll
        n = state.n_paths
        zeros = np.zeros_like(state.benefits)
        return FundState(opening.year, zeros, opening.survivors, opening.assets_pre, opening.assets_pre.copy(),
                         bootstrap_outcome(basis, n), np.ones(n), state.risky_proportion, zeros, zeros, zeros)
    return settle(opening, basis, salary, cpi_realized)


def _reporting_h(basis: LiabilityBasis) -> float:
    cfg = basis.config
    return cfg.target_h if cfg.kind == SINGLE_EMPLOYER else cfg.h0


def cold_opening(basis: LiabilityBasis, n: int) -> OpeningState:
    """Year-0 position: one unit cohort at each contributing age, no benefits, no assets."""
    N = np.zeros(basis.J)
    N[: basis.T] = basis.entry_survival[: basis.T]
    return OpeningState(0, np.zeros((n, basis.J)), N, np.zeros(n))


def bootstrap_outcome(basis: LiabilityBasis, n: int) -> IndexationOutcome:
    h = np.full(n, _reporting_h(basis))
    return IndexationOutcome(h, np.ones(n), (1.0 + basis.cpi) * (1.0 + h) - 1.0, np.full(n, int(Regime.NONE)))


def initial_state(basis: LiabilityBasis, n: int, init: str = "cold", salary=1.0, cpi=0.0) -> FundState:
    """Year-0 post state.

    ``"cold"`` starts an empty fund with no accrued benefits. ``"steady"``
    starts a single-employer fund in its steady state at the target
    indexation, with assets equal to the central-estimate liability, and
    then runs the ordinary year-0 solve.
    """
    salary = np.broadcast_to(np.asarray(salary, dtype=float), (n,))
    cpi = np.broadcast_to(np.asarray(cpi, dtype=float), (n,))
    if init == "cold":
        return settle(cold_opening(basis, n), basis, salary, cpi, outcome=bootstrap_outcome(basis, n))
    if init == "steady":
        from .steadystate import steady_opening
        return settle(steady_opening(basis, n), basis, salary, basis.cpi * np.ones(n))
    raise ValueError(f"unknown initial condition {init!r}")


# -- batch simulation ---------------------------------------------------------

@dataclass
class FundTrace:
    """Per-year records for a batch of scenarios; arrays are ``(n, H + 1)``."""

    years: np.ndarray
    h: np.ndarray
    theta: np.ndarray
    regime: np.ndarray
    index_factor: np.ndarray
    assets_pre: np.ndarray
    assets_post: np.ndarray
    contributions: np.ndarray
    pensions: np.ndarray
    risky_proportion: np.ndarray
    cpi_index: np.ndarray
    wage_index: np.ndarray
    incomes: dict[int, np.ndarray] = field(default_factory=dict)
    accruals: dict[int, np.ndarray] = field(default_factory=dict)
    accrual_contributions: dict[int, np.ndarray] = field(default_factory=dict)
    generation_ids: np.ndarray | None = None
    pv_contributions: np.ndarray | None = None
    pv_pensions: np.ndarray | None = None
    peak_assets: np.ndarray | None = None
    final_state: FundState | None = None

    @property
    def n_paths(self) -> int:
        return self.h.shape[0]

    @property
    def pv_net(self) -> np.ndarray:
        return self.pv_pensions - self.pv_contributions

    @staticmethod
    def concat(parts: Sequence["FundTrace"]) -> "FundTrace":
        first = parts[0]
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts], axis=0)
        arrays = {k: cat(k) for k in ("h", "theta", "regime", "index_factor", "assets_pre", "assets_post",
                                      "contributions", "pensions", "risky_proportion", "cpi_index",
                                      "wage_index")}
        out = FundTrace(years=first.years, **arrays)
        out.incomes = {g: np.concatenate([p.incomes[g] for p in parts]) for g in first.incomes}
        out.accruals = {t: np.concatenate([p.accruals[t] for p in parts]) for t in first.accruals}
        out.accrual_contributions = {t: np.concatenate([p.accrual_contributions[t] for p in parts])
                                     for t in first.accrual_contributions}
        out.generation_ids = first.generation_ids
        if first.pv_contributions is not None:
            out.pv_contributions = cat("pv_contributions")
            out.pv_pensions = cat("pv_pensions")
        out.peak_assets = cat("peak_assets")
        return out


def default_horizon(config: SchemeConfig, table: LifeTable) -> int:
    """Years needed for every member to die: closure + omega - x."""
    return config.closure_year + table.terminal_age - config.join_age


def simulate_fund(config: SchemeConfig, params: EconParams, table: LifeTable, paths: ScenarioPath, *,
                  init: str = "cold", horizon: int | None = None, generations: Iterable[int] = (),
                  accrual_years: Iterable[int] = (), generation_pv: bool = False,
                  start: FundState | None = None, basis: LiabilityBasis | None = None) -> FundTrace:
    """Run the fund over a batch of scenario paths.

    Args:
        config: Scheme contract.
        params: Central-estimate assumptions used by the fund.
        table: Mortality.
        paths: Realized risk factors; column ``t`` is used for year ``t``.
        init: ``"cold"`` or ``"steady"`` (ignored when ``start`` is given).
        horizon: Final year. Defaults to the paths' horizon.
        generations: Generations whose per-member pension is recorded.
        accrual_years: Years whose per-slot accruals and contributions are
            recorded.
        generation_pv: Accumulate each generation's discounted contributions
            and pensions at the pricing rate.
        start: Continue from this state instead of year 0.
        basis: Precomputed basis (must match ``config``).

    Returns:
        The trace. Years before ``start.year`` are left at zero.
    """
    H = paths.horizon if horizon is None else int(horizon)
    if H > paths.horizon:
        raise ValueError("paths are shorter than the requested horizon")
    if basis is None:
        basis = LiabilityBasis(config, params, table, horizon=H)
    n = paths.n_paths
    shape = (n, H + 1)
    tr = FundTrace(years=np.arange(H + 1), h=np.zeros(shape), theta=np.ones(shape),
                   regime=np.full(shape, int(Regime.NONE)), index_factor=np.ones(shape),
                   assets_pre=np.zeros(shape), assets_post=np.zeros(shape), contributions=np.zeros(shape),
                   pensions=np.zeros(shape), risky_proportion=np.zeros(shape), cpi_index=paths.cpi_index[:, :H + 1],
                   wage_index=paths.wage_index[:, :H + 1])
    gens = list(generations)
    for g in gens:
        tr.incomes[g] = np.zeros(shape)
    acc_years = set(accrual_years)
    T, J = basis.T, basis.J
    g_lo, g_hi = T - J, T - 1 + config.closure_year - 1
    if generation_pv:
        tr.generation_ids = np.arange(g_lo, g_hi + 1)
        tr.pv_contributions = np.zeros((n, g_hi - g_lo + 1))
        tr.pv_pensions = np.zeros((n, g_hi - g_lo + 1))
    rate = params.discount_rate

    def record(s: FundState):
        t = s.year
        tr.h[:, t] = s.outcome.h
        tr.theta[:, t] = s.outcome.theta
        tr.regime[:, t] = s.outcome.regime
        tr.index_factor[:, t] = s.index_factor
        tr.assets_pre[:, t] = s.assets_pre
        tr.assets_post[:, t] = s.assets_post
        tr.contributions[:, t] = s.total_contributions
        tr.pensions[:, t] = s.total_pensions
        tr.risky_proportion[:, t] = s.risky_proportion
        for g in gens:
            j = T - 1 - g + t
            if 0 <= j < J:
                tr.incomes[g][:, t] = s.pensions[:, j]
        if t in acc_years:
            tr.accruals[t] = s.new_benefits.copy()
            tr.accrual_contributions[t] = s.contributions.copy()
        if generation_pv:
            # slot j holds generation T - 1 - j + t
            disc = math.exp(-rate * t)
            gslots = T - 1 - np.arange(J) + t
            ok = (gslots >= g_lo) & (gslots <= g_hi) & (s.survivors > 0.0)
            cols = gslots[ok] - g_lo
            tr.pv_contributions[:, cols] += disc * s.contributions[:, ok] * s.survivors[ok]
            tr.pv_pensions[:, cols] += disc * s.pensions[:, ok] * s.survivors[ok]

    if start is None:
        state = initial_state(basis, n, init, salary=paths.wage_index[:, 0], cpi=paths.cpi[:, 0])
    else:
        state = start
    record(state)
    peak = np.maximum(state.assets_post, state.assets_pre)
    for t in range(state.year + 1, H + 1):
        state = step_fund(state, basis, paths.stock_return[:, t], paths.bond_return[:, t], paths.cpi[:, t],
                          paths.wage_index[:, t])
        record(state)
        peak = np.maximum(peak, np.maximum(state.assets_pre, state.assets_post))
    tr.peak_assets = peak
    tr.final_state = state
    return tr


def derive_multi_employer_strategy(single_config: SchemeConfig, params: EconParams, table: LifeTable,
                                   horizon: int | None = None, init: str = "cold") -> InvestmentStrategy:
    """Per-time strategy read off a constant-model single-employer run."""
    from .econmodel import constant_path

    if single_config.kind != SINGLE_EMPLOYER:
        raise ValueError("derivation needs a single-employer configuration")
    H = default_horizon(single_config, table) if horizon is None else horizon
    tr = simulate_fund(single_config, params, table, constant_path(params, H), init=init)
    pi = np.clip(tr.risky_proportion[0], 0.0, 1.0)
    # once the fund is empty the proportion is meaningless; hold the last live value
    live = np.flatnonzero(tr.assets_post[0] > 0.0)
    if live.size:
        pi[live[-1] + 1:] = pi[live[-1]]
    return InvestmentStrategy("time", pi, origin=0)
