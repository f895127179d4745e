"""Steady-state contribution rates and closed-form DB benchmarks.

Two independent routes give the single-employer contribution rate for a
target indexation: the closed steady-state equation
(:func:`solve_contribution_rate_prop1`) and the age-by-age spreadsheet
recursion (:func:`recursive_steady_state` with
:func:`solve_contribution_rate_recursive`). Each serves as an oracle for
the other.

Ages are absolute. Profiles are indexed by ``a - join_age`` over
``join_age <= a < omega``, at a fixed instant with salary 1 at the join age.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, fields

import numpy as np
from scipy import optimize

from .econmodel import EconParams, InvestmentStrategy
from .engine import (SINGLE_EMPLOYER, LiabilityBasis, OpeningState, SchemeConfig, liability_coefficients,
                     _horner, _solve)
from .lifetable import LifeTable


class InfeasibleConfiguration(ValueError):
    """No positive contribution rate balances the steady state."""


@dataclass
class _Setup:
    ages: np.ndarray
    q: np.ndarray
    N: np.ndarray
    pi: np.ndarray
    r: np.ndarray
    x: int
    T: int
    omega: int


def _setup(params: EconParams, table: LifeTable, strategy: InvestmentStrategy, join_age: int,
           retirement_age: int, survive_to_retirement: bool) -> _Setup:
    eff = table.truncated(join_age)
    if survive_to_retirement:
        eff = eff.with_certain_survival_below(retirement_age)
    ages = eff.ages
    q = np.array(eff.q)
    N = np.concatenate([[1.0], np.cumprod(1.0 - q)[:-1]])
    if strategy.kind != "age":
        raise ValueError("steady-state formulas need a per-age strategy")
    pi = np.asarray(strategy.proportion(ages), dtype=float)
    r = pi * params.stock_growth + (1.0 - pi) * params.bond_growth
    return _Setup(ages, q, N, pi, r, join_age, retirement_age - join_age, eff.terminal_age)


def _config_args(config: SchemeConfig):
    return dict(strategy=config.strategy, join_age=config.join_age, retirement_age=config.retirement_age,
                survive_to_retirement=config.survive_to_retirement)


# -- closed-form steady state -------------------------------------------------

def _prop1_parts(beta: float, h: float, params: EconParams, s: _Setup):
    """Pieces of the closed steady-state equation, following its definitions literally."""
    g = params.wage_growth
    hn = (1.0 + params.cpi) * (1.0 + h) - 1.0
    x, T, omega = s.x, s.T, s.omega
    n = s.ages.size

    def Nhat(a):
        return s.N[a - x] if x <= a < omega else 0.0

    def P(a, ell):
        if ell == 0:
            return 1.0
        ks = np.minimum(np.arange(a, a + ell), omega - 1) - x
        return float(np.prod(1.0 / (1.0 + s.r[ks])))

    def Bhat(a):
        return sum(((1.0 + g) / (1.0 + hn)) ** k for k in range(T) if a - x - k >= 0)

    ret = x + T
    L = np.zeros(n)
    for j, a in enumerate(s.ages):
        ba = Bhat(a)
        L[j] = sum((1.0 + g) ** (x - a) * (1.0 + hn) ** (a + ell - x) * P(a, ell) * Nhat(a + ell) * ba
                   for ell in range(1, omega - x) if a + ell >= ret)
    pinet = float((s.pi * L).sum() / L.sum())
    rnet = pinet * params.stock_growth + (1.0 - pinet) * params.bond_growth

    lhs = 0.0
    for a in s.ages:
        ba, bprev = Bhat(a), Bhat(a - 1)
        w = (1.0 + g) ** (x - a) / beta
        t1 = sum((1.0 + hn) ** (a + ell + 1 - x) / (1.0 + rnet) * P(a + 1, ell) * Nhat(a + ell + 1)
                 for ell in range(0, omega - x) if a + ell + 1 >= ret)
        t2 = sum((1.0 + hn) ** (a + ell - x) * P(a, ell) * Nhat(a + ell)
                 for ell in range(1, omega - x) if a + ell >= ret)
        lhs += w * (ba * t1 - bprev * t2)
    rhs = float(sum(Nhat(a) for a in s.ages if x <= a < ret))
    return lhs, rhs, L, pinet, rnet


def solve_contribution_rate_prop1(beta: float, target_h: float, params: EconParams, table: LifeTable,
                                  strategy: InvestmentStrategy, join_age: int = 25, retirement_age: int = 65,
                                  survive_to_retirement: bool = True) -> float:
    """Contribution rate that holds indexation at ``target_h`` in the steady state.

    The steady-state equation is linear in alpha, so alpha is the ratio of
    the net value of entitlements carried forward to the number of
    contributors.

    Raises:
        InfeasibleConfiguration: If the implied alpha is not positive.
    """
    s = _setup(params, table, strategy, join_age, retirement_age, survive_to_retirement)
    lhs, rhs, *_ = _prop1_parts(beta, target_h, params, s)
    alpha = lhs / rhs
    if not alpha > 0.0:
        raise InfeasibleConfiguration(
            f"alpha = {alpha:.6g} for beta={beta}, target_h={target_h}, rates={params}")
    return alpha


def net_risky_proportion(target_h: float, params: EconParams, table: LifeTable, strategy: InvestmentStrategy,
                         join_age: int = 25, retirement_age: int = 65,
                         survive_to_retirement: bool = True) -> float:
    """Steady-state liability-weighted risky proportion."""
    s = _setup(params, table, strategy, join_age, retirement_age, survive_to_retirement)
    return _prop1_parts(1.0, target_h, params, s)[3]


# -- spreadsheet recursion ------------------------------------------------------

@dataclass
class SteadyStateProfile:
    """Steady-state ledger by age at a fixed instant, salary 1 at the join age.

    Columns follow the spreadsheet recursion: ``contributing`` (C_a),
    ``retired`` (R_a), ``inflow`` (I_a), ``accrual`` (B_a),
    ``benefit_before`` (B^{cum,-}_a), ``benefit`` (B^cum_a), ``survivors``
    (N_a), ``outflow`` (O_a), ``unit_liability`` (l_a), ``liability``
    (L_a), ``assets`` (A_a) and ``assets_next`` (A^+_a).
    """

    ages: np.ndarray
    alpha: float
    beta: float
    h: float
    h_nominal: float
    risky: np.ndarray
    returns: np.ndarray
    contributing: np.ndarray
    retired: np.ndarray
    inflow: np.ndarray
    accrual: np.ndarray
    benefit_before: np.ndarray
    benefit: np.ndarray
    survivors: np.ndarray
    outflow: np.ndarray
    unit_liability: np.ndarray
    liability: np.ndarray
    assets: np.ndarray
    assets_next: np.ndarray
    post_liability: np.ndarray
    pi_net: float
    r_net: float
    wage_growth: float

    @property
    def balance_residual(self) -> float:
        """(1 + g) sum L - (1 + r_net) sum A, relative to sum L."""
        lhs = (1.0 + self.wage_growth) * self.liability.sum()
        return float((lhs - (1.0 + self.r_net) * self.assets.sum()) / self.liability.sum())

    LEDGER_COLUMNS = ("ages", "contributing", "retired", "inflow", "accrual", "benefit_before", "benefit",
                      "survivors", "outflow", "unit_liability", "liability", "assets", "assets_next")

    def to_csv(self, path: str | os.PathLike) -> None:
        header = ["age", "C", "R", "I", "B", "B_cum_minus", "B_cum", "N", "O", "ell", "L", "A", "A_plus"]
        cols = [getattr(self, c) for c in self.LEDGER_COLUMNS]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in zip(*cols):
                w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])


def recursive_steady_state(alpha: float, beta: float, params: EconParams, table: LifeTable,
                           strategy: InvestmentStrategy, join_age: int = 25, retirement_age: int = 65,
                           h: float = 0.0, survive_to_retirement: bool = True) -> SteadyStateProfile:
    """Age-by-age steady-state ledger.

    Entitlements roll up the age profile as ``B^{cum,-}_a = B^cum_{a-1}
    (1 + h^n) / (1 + g)``; the liability per unit entitlement rolls down
    from ``l_omega = 0`` as ``l_a = l_{a+1} p_a (1 + h^n) / (1 + r_a) + R_a``.
    Indexation is compounded as ``(1 + i)(1 + h)``.
    """
    s = _setup(params, table, strategy, join_age, retirement_age, survive_to_retirement)
    g = params.wage_growth
    hn = (1.0 + params.cpi) * (1.0 + h) - 1.0
    n = s.ages.size
    C = ((s.ages >= s.x) & (s.ages < s.x + s.T)).astype(float)
    R = (s.ages >= s.x + s.T).astype(float)
    I = alpha * C
    Bnew = C / beta
    Bm = np.zeros(n)
    Bc = np.zeros(n)
    N = np.zeros(n)
    prev_b, prev_n, prev_p = 0.0, 1.0, 1.0
    for j in range(n):
        Bm[j] = prev_b * (1.0 + hn) / (1.0 + g)
        Bc[j] = Bm[j] + Bnew[j]
        N[j] = 1.0 if j == 0 else prev_n * prev_p
        prev_b, prev_n, prev_p = Bc[j], N[j], 1.0 - s.q[j]
    ell = np.zeros(n + 1)
    for j in range(n - 1, -1, -1):
        ell[j] = ell[j + 1] * (1.0 - s.q[j]) * (1.0 + hn) / (1.0 + s.r[j]) + R[j]
    ell = ell[:n]
    L = ell * Bm * N
    O = R * Bc * N
    A = L - O + I
    post = (ell - R) * Bc * N
    pinet = float((s.pi * post).sum() / post.sum())
    rnet = pinet * params.stock_growth + (1.0 - pinet) * params.bond_growth
    return SteadyStateProfile(
        ages=s.ages, alpha=alpha, beta=beta, h=h, h_nominal=hn, risky=s.pi, returns=s.r, contributing=C,
        retired=R, inflow=I, accrual=Bnew, benefit_before=Bm, benefit=Bc, survivors=N, outflow=O,
        unit_liability=ell, liability=L, assets=A, assets_next=A * (1.0 + s.r), post_liability=post,
        pi_net=pinet, r_net=rnet, wage_growth=g)


def solve_contribution_rate_recursive(beta: float, target_h: float, params: EconParams, table: LifeTable,
                                      strategy: InvestmentStrategy, join_age: int = 25, retirement_age: int = 65,
                                      survive_to_retirement: bool = True, bracket=(1e-9, 5.0)) -> float:
    """Contribution rate balancing the spreadsheet ledger.

    Finds alpha with ``(1 + g) sum L_a = (1 + r_net) sum A_a``, i.e. assets
    after one year of growth at the fund's net return match liabilities
    after one year of wage growth.

    Raises:
        InfeasibleConfiguration: If no root exists in ``bracket``.
    """
    def resid(a):
        p = recursive_steady_state(a, beta, params, table, strategy, join_age, retirement_age, target_h,
                                   survive_to_retirement)
        return (1.0 + p.wage_growth) * p.liability.sum() - (1.0 + p.r_net) * p.assets.sum()

    lo, hi = bracket
    flo, fhi = resid(lo), resid(hi)
    if flo * fhi > 0.0:
        raise InfeasibleConfiguration(
            f"no contribution rate in {bracket} balances beta={beta}, target_h={target_h}")
    return optimize.brentq(resid, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


def steady_state_profile(config: SchemeConfig, params: EconParams, table: LifeTable) -> SteadyStateProfile:
    """Ledger for a single-employer configuration at its target indexation."""
    return recursive_steady_state(config.alpha, config.beta, params, table, h=config.target_h,
                                  **_config_args(config))


def calibrated_config(params: EconParams, table: LifeTable, **overrides) -> SchemeConfig:
    """Single-employer config whose alpha solves the steady-state equation."""
    cfg = SchemeConfig(**overrides)
    alpha = solve_contribution_rate_prop1(cfg.beta, cfg.target_h, params, table, **_config_args(cfg))
    return SchemeConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(cfg)}, "alpha": alpha})


# -- engine bridge ------------------------------------------------------------

def steady_benefits_before(basis: LiabilityBasis) -> np.ndarray:
    """Last year's entitlements, per member, in the slots occupied at t = 0.

    Salary is ``base_salary`` at t = 0, so a member aged a at t = 0 joined
    when salary was ``(1 + g)**(x - a)`` of today's.
    """
    cfg, params = basis.config, basis.params
    g = params.wage_growth
    hn = (1.0 + basis.cpi) * (1.0 + cfg.target_h) - 1.0
    out = np.zeros(basis.J)
    for j in range(1, basis.J):
        a = basis.x + j
        k = np.arange(basis.T)
        bhat = np.sum((((1.0 + g) / (1.0 + hn)) ** k)[a - 1 - basis.x - k >= 0])
        out[j] = (1.0 + g) ** (basis.x - a) * (1.0 + hn) ** (a - 1 - basis.x) * bhat
    return out * cfg.base_salary / cfg.beta


def steady_opening(basis: LiabilityBasis, n: int) -> OpeningState:
    """Year-0 position of a fund already in its steady state.

    Assets equal the central-estimate liability at the target indexation,
    so the year-0 solve returns the target exactly.
    """
    if basis.config.kind != SINGLE_EMPLOYER:
        raise ValueError("steady-state start is defined for single-employer schemes")
    N = basis.entry_survival.copy()
    B = np.tile(steady_benefits_before(basis), (n, 1))
    y = (1.0 + basis.cpi) * (1.0 + basis.config.target_h)
    d = liability_coefficients(B, N, basis.K(0))
    A = _horner(d, np.full(n, y))
    return OpeningState(0, B, N, A)


@dataclass
class ShockResult:
    """Effect of an asset shock on a steady-state fund."""

    shock: float
    h_before: float
    h_after: float
    theta: float
    regime: int
    ages: np.ndarray
    generations: np.ndarray
    liability_before: np.ndarray
    liability_after: np.ndarray

    @property
    def relative_change(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.liability_before > 0.0,
                            self.liability_after / self.liability_before - 1.0, 0.0)


def shock_sensitivity(config: SchemeConfig, params: EconParams, table: LifeTable, shock: float) -> ShockResult:
    """Re-solve indexation after scaling steady-state assets by ``1 + shock``.

    Liabilities are valued per age, before this year's payments, at the
    solved indexation (and bonus or cut factor).
    """
    basis = LiabilityBasis(config, params, table)
    op = steady_opening(basis, 1)
    shocked = OpeningState(0, op.benefits, op.survivors, op.assets_pre * (1.0 + shock))
    K = basis.K(0)
    d = liability_coefficients(shocked.benefits, shocked.survivors, K)
    out = _solve(d, shocked.assets_pre, basis)
    y0 = (1.0 + basis.cpi) * (1.0 + config.target_h)
    y1 = float(1.0 + out.h_nominal[0])
    ell = np.arange(basis.D)
    W = op.benefits[0] * op.survivors
    before = W * (K @ y0 ** (ell + 1))
    after = W * (K @ y1 ** (ell + 1)) * out.theta[0]
    gens = config.max_entry_age - basis.ages
    return ShockResult(shock, config.target_h, float(out.h[0]), float(out.theta[0]), int(out.regime[0]),
                       basis.ages, gens, before, after)


def liability_h_sensitivity(config: SchemeConfig, params: EconParams, table: LifeTable,
                            dh: float = 1e-5) -> np.ndarray:
    """Numerical (1/L_a) dL_a/dh per age slot for the steady-state fund."""
    basis = LiabilityBasis(config, params, table)
    K = basis.K(0)
    ell = np.arange(basis.D)
    val = lambda h: K @ ((1.0 + basis.cpi) * (1.0 + h)) ** (ell + 1)
    h = config.target_h
    up, dn, mid = val(h + dh), val(h - dh), val(h)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mid > 0.0, (up - dn) / (2.0 * dh) / mid, np.nan)


# -- DB benchmarks ----------------------------------------------------------------

def db_instantaneous_pnl(k, n: int, r: float, i: float):
    """Fractional P&L of a year's DB contribution after ``k`` years of service.

    ``n alpha**k (alpha - 1) / (alpha**n - 1) - 1`` with ``alpha = (1 + r)
    / (1 + i)``; equals 0 in the limit ``alpha -> 1``.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 0) or np.any(k >= n):
        raise ValueError("k must lie in [0, n)")
    a = (1.0 + r) / (1.0 + i)
    if abs(a - 1.0) < 1e-13:
        out = np.zeros_like(k)
    else:
        out = n * a ** k * (a - 1.0) / (a ** n - 1.0) - 1.0
    return float(out) if out.ndim == 0 else out


def _ratio_term(u: float, v: float, n: int) -> float:
    """(u**n - v**n) / (u - v) with the limit n v**(n-1) at u = v."""
    if abs(u - v) < 1e-7 * max(abs(u), abs(v), 1.0):
        # second-order expansion around the midpoint
        m = 0.5 * (u + v)
        e = 0.5 * (u - v)
        return n * m ** (n - 1) + n * (n - 1) * (n - 2) / 6.0 * m ** (n - 3) * e * e
    return (u ** n - v ** n) / (u - v)


def db_to_dc_ratio(n: int, r: float, i: float, g: float) -> float:
    """First DB pension over the pension from riskless DC plus annuity.

    Limits are taken where ``i = g``, ``r = g`` or ``r = i``.
    """
    a = (1.0 + r) / (1.0 + i)
    # (alpha - 1) / (alpha**n - 1) = 1 / sum alpha**k
    geo = 1.0 / _ratio_term(a, 1.0, n)
    num = (1.0 + i) * n * a ** n * _ratio_term(1.0 + i, 1.0 + g, n)
    den = (1.0 + r) * _ratio_term(1.0 + r, 1.0 + g, n)
    return geo * num / den


def liability_h_duration_exponential(i: float, h: float, mu: float, lam: float, T: float) -> float:
    """Relative sensitivity (1/L) dL/dh of a deferred continuous annuity.

    Continuous rates: inflation ``i``, indexation ``h``, discount ``mu``,
    force of mortality ``lam``; payments start after ``T`` years.

    Raises:
        ValueError: If ``i + h - mu - lam >= 0`` (the annuity diverges).
    """
    k = i + h - mu - lam
    if k >= 0.0:
        raise ValueError("need i + h - mu - lam < 0 for a finite liability")
    return (-1.0 + k * T) / k

