"""Economic scenarios, central-estimate projections and investment strategies.

Two models are supported: a constant model where every risk factor sits at
its long-term median, and a Black-Scholes model with one risky asset and
deterministic CPI, wages and bond returns. Rates in :class:`EconParams` are
annual effective rates; the GBM drifts are continuously compounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

PHYSICAL = "physical"
PRICING = "pricing"
MIXED = "mixed"


@dataclass(frozen=True)
class EconParams:
    """Long-term economic assumptions.

    Attributes:
        stock_growth: Expected annual stock return r^S (also the central
            estimate used by the fund).
        stock_volatility: Annual log-volatility sigma of the risky asset.
        bond_growth: Annual return r^B on the liability-matching bonds.
        wage_growth: Annual salary growth g.
        cpi: Annual CPI inflation i.
        riskfree: Continuously compounded pricing rate r. ``None`` means
            ``ln(1 + bond_growth)``.
        stock_drift_shift: Added to the annual stock return when paths are
            generated under the physical measure, while the fund's central
            estimates keep using ``stock_growth``.
        drift_convention: ``"mean"`` sets the physical drift so that the
            expected gross stock return is ``1 + r^S``; ``"median"`` makes
            ``1 + r^S`` the median gross return instead (drift raised by
            ``sigma**2 / 2``). Only realized paths are affected.
    """

    stock_growth: float = 0.0773
    stock_volatility: float = 0.0
    bond_growth: float = 0.0436
    wage_growth: float = 0.0383
    cpi: float = 0.02
    riskfree: float | None = None
    stock_drift_shift: float = 0.0
    drift_convention: str = "mean"

    def __post_init__(self):
        if self.drift_convention not in ("mean", "median"):
            raise ValueError("drift_convention must be 'mean' or 'median'")
        if self.stock_volatility < 0.0:
            raise ValueError("stock_volatility must be non-negative")
        for name in ("stock_growth", "bond_growth", "wage_growth", "cpi"):
            if getattr(self, name) <= -1.0:
                raise ValueError(f"{name} must exceed -1")
        if self.stock_growth + self.stock_drift_shift <= -1.0:
            raise ValueError("shifted stock growth must exceed -1")

    @property
    def physical_drift(self) -> float:
        """mu with E[S_1/S_0] = 1 + r^S (+ shift), or the median equal to it."""
        mu = math.log1p(self.stock_growth + self.stock_drift_shift)
        if self.drift_convention == "median":
            mu += 0.5 * self.stock_volatility ** 2
        return mu

    @property
    def pricing_drift(self) -> float:
        return math.log1p(self.bond_growth) if self.riskfree is None else self.riskfree

    @property
    def discount_rate(self) -> float:
        """Continuously compounded rate used to discount pricing-measure cashflows."""
        return self.pricing_drift


TABLE1 = EconParams()

# The paper does not report the equity volatility of its Black-Scholes
# comparison runs; 20% is a conventional long-run equity figure.
DEFAULT_VOLATILITY = 0.2


@dataclass(frozen=True)
class InvestmentStrategy:
    """Risky-asset proportions indexed by age or by calendar year.

    ``values[k]`` is the proportion at age (or year) ``origin + k``. Lookups
    past the end of ``values`` return the last value; lookups before
    ``origin`` are a domain error.
    """

    kind: str
    values: np.ndarray
    origin: int = 0

    def __post_init__(self):
        if self.kind not in ("age", "time"):
            raise ValueError("kind must be 'age' or 'time'")
        v = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        if v.size == 0:
            raise ValueError("strategy needs at least one value")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("risky proportions must lie in [0, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, proportion: float, kind: str = "age") -> "InvestmentStrategy":
        return cls(kind, np.array([proportion]), origin=0)

    @classmethod
    def lifestyle(cls, start_age: float | None, end_age: float | None, high: float = 1.0,
                  low: float = 0.0, min_age: int = 0, max_age: int = 121) -> "InvestmentStrategy":
        """Per-age strategy: ``high`` up to ``start_age``, linear to ``low`` at ``end_age``.

        ``start_age=None`` means never de-risk.
        """
        ages = np.arange(min_age, max_age, dtype=float)
        if start_age is None:
            return cls("age", np.full(ages.size, high), origin=min_age)
        if end_age is None or end_age <= start_age:
            raise ValueError("end_age must exceed start_age")
        w = np.clip((ages - start_age) / (end_age - start_age), 0.0, 1.0)
        return cls("age", high + (low - high) * w, origin=min_age)

    def proportion(self, k) -> np.ndarray | float:
        """Risky proportion at age/year ``k`` (scalar or array)."""
        k = np.asarray(k)
        if np.any(k < self.origin):
            raise ValueError(f"{self.kind} {int(np.min(k))} is before the strategy's origin {self.origin}")
        idx = np.minimum(k - self.origin, self.values.size - 1)
        out = self.values[idx]
        return float(out) if out.ndim == 0 else out

    def predicted_returns(self, params: EconParams, start: int, length: int) -> np.ndarray:
        """Central-estimate portfolio returns for ``start .. start + length - 1``."""
        pi = self.proportion(np.arange(start, start + length))
        return pi * params.stock_growth + (1.0 - pi) * params.bond_growth


@dataclass
class ScenarioPath:
    """Realized risk factors for a batch of scenarios.

    Arrays have shape ``(n_paths, horizon + 1)``. Column ``t`` holds the
    realized quantity over the year ``(t-1, t]``. Column 0 of the return
    and CPI arrays is unused and set to 0.

    Attributes:
        stock_return: Annual return on the risky asset.
        bond_return: Annual return on the liability-matching bonds.
        cpi: Annual CPI inflation.
        wage_index: Cumulative salary factor, 1 at t = 0.
        measure: ``"physical"``, ``"pricing"`` or ``"mixed"``.
        switch_year: Last year simulated with the physical drift (mixed only).
        seed: Master seed the paths were drawn from (``None`` if deterministic).
    """

    stock_return: np.ndarray
    bond_return: np.ndarray
    cpi: np.ndarray
    wage_index: np.ndarray
    measure: str = PHYSICAL
    switch_year: int | None = None
    seed: int | None = None
    first_index: int = 0

    @property
    def horizon(self) -> int:
        return self.stock_return.shape[1] - 1

    @property
    def n_paths(self) -> int:
        return self.stock_return.shape[0]

    @property
    def cpi_index(self) -> np.ndarray:
        c = np.cumprod(1.0 + self.cpi[:, 1:], axis=1)
        return np.concatenate([np.ones((self.n_paths, 1)), c], axis=1)

    def subset(self, rows) -> "ScenarioPath":
        rows = np.atleast_1d(rows)
        return replace(self, stock_return=self.stock_return[rows], bond_return=self.bond_return[rows],
                       cpi=self.cpi[rows], wage_index=self.wage_index[rows])

    def tile(self, n: int) -> "ScenarioPath":
        """Repeat a single path ``n`` times."""
        if self.n_paths != 1:
            raise ValueError("tile expects a single path")
        rep = lambda a: np.repeat(a, n, axis=0)
        return replace(self, stock_return=rep(self.stock_return), bond_return=rep(self.bond_return),
                       cpi=rep(self.cpi), wage_index=rep(self.wage_index))


def _deterministic_columns(params: EconParams, horizon: int, n: int):
    ones = np.ones((n, horizon + 1))
    bond = params.bond_growth * ones
    cpi = params.cpi * ones
    bond[:, 0] = cpi[:, 0] = 0.0
    wage = np.broadcast_to((1.0 + params.wage_growth) ** np.arange(horizon + 1), (n, horizon + 1)).copy()
    return bond, cpi, wage


def constant_path(params: EconParams, horizon: int, n_paths: int = 1) -> ScenarioPath:
    """Every risk factor at its median rate in every year."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    bond, cpi, wage = _deterministic_columns(params, horizon, n_paths)
    stock = np.full((n_paths, horizon + 1), params.stock_growth)
    stock[:, 0] = 0.0
    return ScenarioPath(stock, bond, cpi, wage, measure=PHYSICAL)


def scenario_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for scenario ``key`` under master ``seed``.

    The stream depends only on ``(seed, key)``, never on how scenarios are
    split across workers.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key)))


def _drifts(params: EconParams, measure: str, switch_year: int | None, horizon: int) -> np.ndarray:
    years = np.arange(1, horizon + 1)
    if measure == PHYSICAL:
        return np.full(horizon, params.physical_drift)
    if measure == PRICING:
        return np.full(horizon, params.pricing_drift)
    if measure == MIXED:
        if switch_year is None:
            raise ValueError("mixed measure needs a switch year")
        return np.where(years <= switch_year, params.physical_drift, params.pricing_drift)
    raise ValueError(f"unknown measure {measure!r}")


def black_scholes_stock_returns(params: EconParams, drifts: np.ndarray, normals: np.ndarray,
                                dt: float) -> np.ndarray:
    """Annual returns from standard normals of shape ``(..., horizon, steps)``."""
    sigma = params.stock_volatility
    drift = (drifts[:, None] - 0.5 * sigma * sigma) * dt
    logret = (drift + sigma * math.sqrt(dt) * normals).sum(axis=-1)
    return np.expm1(logret)


def simulate_black_scholes_paths(params: EconParams, horizon: int, n_paths: int, seed: int,
                                 measure: str = PHYSICAL, switch_year: int | None = None,
                                 dt: float = 1.0, first_index: int = 0,
                                 key_prefix: Sequence[int] = ()) -> ScenarioPath:
    """Draw Black-Scholes scenarios.

    Scenario ``k`` of the batch uses the stream ``scenario_rng(seed,
    *key_prefix, first_index + k)``, so any slice of a large run can be
    regenerated on its own. Under the mixed measure years ``t <=
    switch_year`` use the physical drift and later years the pricing drift.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    steps = int(round(1.0 / dt))
    if abs(steps * dt - 1.0) > 1e-12:
        raise ValueError("dt must divide one year")
    drifts = _drifts(params, measure, switch_year, horizon)
    stock = np.zeros((n_paths, horizon + 1))
    for k in range(n_paths):
        z = scenario_rng(seed, *key_prefix, first_index + k).standard_normal((horizon, steps))
        stock[k, 1:] = black_scholes_stock_returns(params, drifts, z, dt)
    bond, cpi, wage = _deterministic_columns(params, horizon, n_paths)
    return ScenarioPath(stock, bond, cpi, wage, measure=measure, switch_year=switch_year,
                        seed=seed, first_index=first_index)


def simulate_black_scholes_path(params: EconParams, measure: str, horizon: int, seed: int,
                                dt: float = 1.0, switch_year: int | None = None) -> ScenarioPath:
    """Single-scenario convenience wrapper around :func:`simulate_black_scholes_paths`."""
    return simulate_black_scholes_paths(params, horizon, 1, seed, measure=measure,
                                        switch_year=switch_year, dt=dt)


@dataclass(frozen=True)
class ScenarioSource:
    """Pluggable generator: ``make(horizon, n_paths, first_index)`` -> ScenarioPath."""

    make: Callable[[int, int, int], ScenarioPath]
    label: str = "custom"


def black_scholes_source(params: EconParams, seed: int, measure: str = PHYSICAL,
                         switch_year: int | None = None, dt: float = 1.0,
                         key_prefix: Sequence[int] = ()) -> ScenarioSource:
    def make(horizon, n, first):
        return simulate_black_scholes_paths(params, horizon, n, seed, measure=measure,
                                            switch_year=switch_year, dt=dt, first_index=first,
                                            key_prefix=key_prefix)
    return ScenarioSource(make, f"black_scholes[{measure}]")


def constant_source(params: EconParams) -> ScenarioSource:
    return ScenarioSource(lambda horizon, n, first: constant_path(params, horizon, n), "constant")


def project_cpi(params: EconParams, t: int = 0, ell: int = 0) -> float:
    """Central CPI projection i(t, l); the median rate in both models."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    return params.cpi


def increment_factor(params: EconParams, h: float, t: int = 0, ell: int = 0) -> float:
    """Projected indexation over ``ell`` years, ((1 + i)(1 + h))**ell."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    return ((1.0 + project_cpi(params, t, 0)) * (1.0 + h)) ** ell


def discount_factor(strategy: InvestmentStrategy, params: EconParams, t: int, ell: int,
                    context: int) -> float:
    """Central-estimate discount P(t, l) = prod_{k<l} 1/(1 + r_pred).

    ``context`` is the member's age at ``t`` for a per-age strategy, or the
    year ``t`` itself for a per-time strategy.
    """
    if ell < 0:
        raise ValueError("ell must be non-negative")
    if context < strategy.origin:
        raise ValueError(f"context {context} is outside the strategy domain")
    if ell == 0:
        return 1.0
    r = strategy.predicted_returns(params, context, ell)
    return float(np.exp(-np.log1p(r).sum()))
