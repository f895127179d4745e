"""Command-line driver: ``cdcsim <experiment> --config run.ini``.

Experiments are described by an INI file with sections ``[scheme]``,
``[economics]``, ``[mortality]``, ``[run]`` and ``[experiment]``. Every
run writes CSV files plus ``manifest.json`` (file hashes) into the output
directory. Exit codes: 0 success, 1 failed validation checks, 2 bad
configuration.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .analytics import compare_schemes, fan_deciles, income_trace, lifetime_mean_replacement_ratio, \
    replacement_ratio, shifted_return_experiment, stable_mean, years_invested, SCHEMES
from .comparators import dc_config, pooled_config, simulate_dc_annuity, simulate_pooled_annuity
from .econmodel import PHYSICAL, EconParams, InvestmentStrategy, constant_path, simulate_black_scholes_paths
from .engine import MULTI_EMPLOYER, SINGLE_EMPLOYER, FundTrace, SchemeConfig, SolverError, default_horizon, \
    derive_multi_employer_strategy, simulate_fund
from .io import write_csv, write_manifest
from .lifetable import LifeTable, bundled_table, gompertz_table, load_life_table, make_exponential_table
from .parallel import map_chunks
from .steadystate import InfeasibleConfiguration, calibrated_config, db_instantaneous_pnl, db_to_dc_ratio, \
    shock_sensitivity, solve_contribution_rate_prop1, solve_contribution_rate_recursive, steady_state_profile
from .valuation import instantaneous_pnl_scenarios, lifetime_q_values, pnl_by_age, pnl_surface

SPEC_VERSION = 1
EXPERIMENTS = ("simulate", "steady_state", "pnl_surface", "pnl_scenarios", "compare", "validate", "shock",
               "shifted_returns")
EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names file, line and key."""


# -- schema ----------------------------------------------------------------------

def _int(s):
    return int(s)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else _float(s)


def _opt_int(s):
    return None if s.strip().lower() in ("", "none") else int(s)


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _choice(*options):
    def parse(s):
        v = s.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


def _int_list(s):
    """``60`` or ``40,50,60`` or ``start:stop[:step]`` (stop exclusive)."""
    out = []
    for part in s.split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3):
                raise ValueError("ranges are start:stop[:step]")
            out.extend(range(*bits))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError("empty list")
    return out


def _float_list(s):
    out = [_float(p) for p in s.split(",") if p.strip()]
    if not out:
        raise ValueError("empty list")
    return out


def _str_list(s):
    return [p.strip() for p in s.split(",") if p.strip()]


SCHEMA: dict[str, dict[str, tuple[Callable, object]]] = {
    "scheme": {
        "kind": (_choice(SINGLE_EMPLOYER, MULTI_EMPLOYER), SINGLE_EMPLOYER),
        "alpha": (str, "calibrate"),
        "beta": (_float, 80.0),
        "h_plus": (_float, 0.05),
        "nominal_floor": (_float, 0.0),
        "target_h": (_float, 0.0),
        "h0": (_float, 0.0),
        "join_age": (_int, 25),
        "retirement_age": (_int, 65),
        "closure_year": (_int, 100),
        "base_salary": (_float, 1.0),
        "strategy": (str, "lifestyle:65:85"),
        "survive_to_retirement": (_bool, True),
    },
    "economics": {
        "model": (_choice("constant", "black_scholes"), "black_scholes"),
        "stock_growth": (_float, 0.0773),
        "stock_volatility": (_float, 0.2),
        "bond_growth": (_float, 0.0436),
        "wage_growth": (_float, 0.0383),
        "cpi": (_float, 0.02),
        "riskfree": (_opt_float, None),
        "drift_convention": (_choice("mean", "median"), "mean"),
        "dt": (_float, 1.0),
    },
    "mortality": {
        "source": (_choice("bundled", "gompertz", "exponential", "file"), "bundled"),
        "path": (str, ""),
        "terminal_age": (_opt_int, None),
        "mu65": (_float, 0.008),
        "growth": (_float, 0.13),
        "force": (_float, 0.05),
        "min_age": (_int, 18),
    },
    "run": {
        "n_scenarios": (_int, 1000),
        "seed": (_int, None),
        "horizon": (_opt_int, None),
        "threads": (_opt_int, None),
        "out": (str, "out"),
    },
    "experiment": {
        "spec_version": (_int, None),
        "kind": (_choice(*EXPERIMENTS), None),
        "init": (_choice("cold", "steady"), "cold"),
        "generations": (_int_list, [60]),
        "years": (_int_list, list(range(0, 100, 10))),
        "year": (_int, 50),
        "n_inner": (_int, 200),
        "shocks": (_float_list, [0.1, -0.1]),
        "shifts": (_float_list, [-0.01, 0.01]),
        "schemes": (_str_list, list(SCHEMES)),
        "normalize": (_bool, False),
        "lifetime": (_bool, False),
        "pnl_year": (_int, 30),
        "validation_scenarios": (_int, 2000),
    },
}
REQUIRED = {("run", "seed"), ("experiment", "spec_version")}


def _key_lines(path: Path) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for no, raw in enumerate(path.read_text().splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            lines.setdefault((section, ""), no)
        elif section and s and s[0] not in "#;" and ("=" in s or ":" in s):
            key = s.split("=", 1)[0] if "=" in s else s.split(":", 1)[0]
            lines.setdefault((section, key.strip().lower()), no)
    return lines


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment file."""

    source: Path
    values: dict[str, dict[str, object]]
    scheme: SchemeConfig
    params: EconParams
    table: LifeTable
    model: str
    dt: float
    calibrate_alpha: bool
    derived_strategy: bool
    horizon: int

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def seed(self) -> int:
        return int(self.values["run"]["seed"])

    @property
    def n_scenarios(self) -> int:
        return int(self.values["run"]["n_scenarios"])

    @property
    def threads(self) -> int | None:
        return self.values["run"]["threads"]


def _parse_strategy(text: str, min_age: int, max_age: int) -> InvestmentStrategy | str:
    bits = [b.strip() for b in text.split(":")]
    name = bits[0]
    if name == "derived":
        return "derived"
    if name == "constant" and len(bits) == 2:
        return InvestmentStrategy.constant(_float(bits[1]))
    if name == "lifestyle" and len(bits) in (3, 5):
        high, low = (1.0, 0.0) if len(bits) == 3 else (_float(bits[3]), _float(bits[4]))
        return InvestmentStrategy.lifestyle(_float(bits[1]), _float(bits[2]), high, low, min_age, max_age)
    raise ValueError("expected lifestyle:START:END[:HIGH:LOW], constant:P or derived")


def _load_table(m: dict, where: Callable[[str], str], base: Path) -> LifeTable:
    src = m["source"]
    if src == "bundled":
        return bundled_table()
    omega = m["terminal_age"] or 121
    if src == "gompertz":
        return gompertz_table(m["mu65"], m["growth"], m["min_age"], omega)
    if src == "exponential":
        return make_exponential_table(m["force"], m["min_age"], omega)
    p = Path(m["path"])
    if not p.is_absolute():
        p = base / p
    if not m["path"] or not p.exists():
        raise ConfigError(f"{where('path')}: life table file {str(p)!r} does not exist")
    try:
        return load_life_table(p, terminal_age=m["terminal_age"])
    except ValueError as e:
        raise ConfigError(f"{where('path')}: {e}") from None


def load_config(path: str | Path, seed: int | None = None, threads: int | None = None,
                out: str | None = None, kind: str | None = None) -> ExperimentConfig:
    """Parse an experiment file, applying command-line overrides.

    Raises:
        ConfigError: With file, line and key for the first problem found.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    lines = _key_lines(path)

    def where(section, key=""):
        no = lines.get((section, key)) or lines.get((section, ""))
        loc = f"{path}:{no}" if no else str(path)
        return f"{loc}: [{section}]" + (f" {key}" if key else "")

    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where(section, key)}: unknown key")
    values: dict[str, dict[str, object]] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            if cp.has_option(section, key):
                try:
                    values[section][key] = parse(cp.get(section, key))
                except ValueError as e:
                    raise ConfigError(f"{where(section, key)}: {e}") from None
            elif (section, key) in REQUIRED and not (section == "run" and key == "seed" and seed is not None):
                raise ConfigError(f"{where(section)}: missing required key {key!r}")
            else:
                values[section][key] = default
    if seed is not None:
        values["run"]["seed"] = int(seed)
    if threads is not None:
        values["run"]["threads"] = int(threads)
    if out is not None:
        values["run"]["out"] = out
    if values["experiment"]["spec_version"] != SPEC_VERSION:
        raise ConfigError(f"{where('experiment', 'spec_version')}: unsupported version "
                          f"{values['experiment']['spec_version']}, expected {SPEC_VERSION}")
    declared = values["experiment"]["kind"]
    if kind is not None and declared is not None and declared != kind:
        raise ConfigError(f"{where('experiment', 'kind')}: file declares {declared!r} but {kind!r} was requested")
    values["experiment"]["kind"] = kind or declared
    run = values["run"]
    if run["seed"] < 0:
        raise ConfigError(f"{where('run', 'seed')}: seed must be non-negative")
    if run["n_scenarios"] < 1:
        raise ConfigError(f"{where('run', 'n_scenarios')}: must be at least 1")
    if run["threads"] is not None and run["threads"] < 1:
        raise ConfigError(f"{where('run', 'threads')}: must be at least 1")

    e = values["economics"]
    try:
        params = EconParams(e["stock_growth"], e["stock_volatility"], e["bond_growth"], e["wage_growth"],
                            e["cpi"], e["riskfree"], 0.0, e["drift_convention"])
    except ValueError as err:
        raise ConfigError(f"{where('economics')}: {err}") from None
    if e["dt"] <= 0.0 or abs(round(1.0 / e["dt"]) * e["dt"] - 1.0) > 1e-12:
        raise ConfigError(f"{where('economics', 'dt')}: dt must divide one year")

    table = _load_table(values["mortality"], lambda k: where("mortality", k), path.parent)

    s = values["scheme"]
    try:
        strat = _parse_strategy(s["strategy"], table.min_age, table.terminal_age)
    except ValueError as err:
        raise ConfigError(f"{where('scheme', 'strategy')}: {err}") from None
    calibrate = str(s["alpha"]).strip().lower() == "calibrate"
    if not calibrate:
        try:
            alpha = _float(s["alpha"])
        except ValueError:
            raise ConfigError(f"{where('scheme', 'alpha')}: expected a number or 'calibrate'") from None
    derived = strat == "derived"
    if derived and s["kind"] != MULTI_EMPLOYER:
        raise ConfigError(f"{where('scheme', 'strategy')}: 'derived' applies to multi_employer schemes only")
    fields_ = dict(kind=s["kind"], beta=s["beta"], h_plus=s["h_plus"], nominal_floor=s["nominal_floor"],
                   target_h=s["target_h"], h0=s["h0"], join_age=s["join_age"],
                   retirement_age=s["retirement_age"], closure_year=s["closure_year"],
                   base_salary=s["base_salary"], survive_to_retirement=s["survive_to_retirement"])
    if not derived:
        fields_["strategy"] = strat
    try:
        scheme = SchemeConfig(**fields_) if calibrate else SchemeConfig(alpha=alpha, **fields_)
    except ValueError as err:
        raise ConfigError(f"{where('scheme')}: {err}") from None
    if scheme.retirement_age > table.terminal_age or scheme.join_age < table.min_age:
        raise ConfigError(f"{where('scheme', 'join_age')}: ages fall outside the life table "
                          f"[{table.min_age}, {table.terminal_age})")

    need = default_horizon(scheme, table)
    horizon = run["horizon"] if run["horizon"] is not None else need
    if horizon < need:
        raise ConfigError(f"{where('run', 'horizon')}: horizon {horizon} is shorter than "
                          f"closure_year + omega - join_age = {need}")
    return ExperimentConfig(path, values, scheme, params, table, e["model"], e["dt"], calibrate, derived,
                            horizon)


# -- scheme resolution --------------------------------------------------------------

def single_employer_base(cfg: ExperimentConfig) -> SchemeConfig:
    """Single-employer contract from the config; alpha calibrated if requested."""
    s = cfg.scheme
    base = replace(s, kind=SINGLE_EMPLOYER)
    if cfg.derived_strategy:
        base = replace(base, strategy=SchemeConfig().strategy)
    if cfg.calibrate_alpha:
        alpha = solve_contribution_rate_prop1(base.beta, base.target_h, cfg.params, cfg.table, base.strategy,
                                              base.join_age, base.retirement_age, base.survive_to_retirement)
        base = replace(base, alpha=alpha)
    return base


def resolve_scheme(cfg: ExperimentConfig) -> SchemeConfig:
    """Fully specified scheme: calibrated alpha and, for multi-employer, a per-time strategy."""
    base = single_employer_base(cfg)
    if cfg.scheme.kind == SINGLE_EMPLOYER:
        return base
    strat = cfg.scheme.strategy
    if cfg.derived_strategy:
        strat = derive_multi_employer_strategy(base, cfg.params, cfg.table, cfg.horizon)
    return replace(cfg.scheme, alpha=base.alpha, strategy=strat)


def _paths(cfg: ExperimentConfig, params: EconParams, horizon: int, a: int, b: int):
    if cfg.model == "constant":
        return constant_path(params, horizon, b - a)
    return simulate_black_scholes_paths(params, horizon, b - a, cfg.seed, measure=PHYSICAL, dt=cfg.dt,
                                        first_index=a)


def _n(cfg: ExperimentConfig) -> int:
    return 1 if cfg.model == "constant" else cfg.n_scenarios


# -- experiments ----------------------------------------------------------------------

DECILE_HEADER = ["d10", "d20", "d30", "d40", "d50", "d60", "d70", "d80", "d90"]


def _fan_rows(first, samples: np.ndarray):
    grid = fan_deciles(samples)
    for k, label in enumerate(first):
        yield [label, *grid.deciles[:, k], grid.example[k]]


def run_simulate(cfg: ExperimentConfig, out: Path) -> list[Path]:
    scheme = resolve_scheme(cfg)
    gens = cfg.get("experiment", "generations")
    omega = cfg.table.terminal_age
    H = max(cfg.horizon, max(gens) + 1 + omega - scheme.retirement_age)
    init = cfg.get("experiment", "init")

    def run(a, b):
        paths = _paths(cfg, cfg.params, H, a, b)
        tr = simulate_fund(scheme, cfg.params, cfg.table, paths, init=init, generations=gens)
        rr = {}
        for g in gens:
            it = income_trace(tr.incomes[g], paths, g, scheme.retirement_age, omega, scheme.base_salary)
            rr[g] = (replacement_ratio(it),
                     lifetime_mean_replacement_ratio(it, years_invested(scheme, g), scheme.career_years,
                                                     normalize=cfg.get("experiment", "normalize")))
        tr.incomes = {}
        tr.final_state = None
        return tr, rr

    parts = map_chunks(run, _n(cfg), cfg.threads)
    tr = FundTrace.concat([p[0] for p in parts])
    files = [write_csv(out / "fund_trace.csv",
                       ["year", "h", "theta", "regime", "assets_pre", "assets_post", "contributions", "pensions",
                        "risky_proportion"],
                       zip(tr.years, tr.h[0], tr.theta[0], tr.regime[0], tr.assets_pre[0], tr.assets_post[0],
                           tr.contributions[0], tr.pensions[0], tr.risky_proportion[0]))]
    summary = []
    for g in gens:
        ratios = np.concatenate([p[1][g][0] for p in parts])
        means = np.concatenate([p[1][g][1] for p in parts])
        ages = np.arange(scheme.retirement_age, omega)
        files.append(write_csv(out / f"income_g{g}.csv", ["age", "replacement_ratio"], zip(ages, ratios[0])))
        if ratios.shape[0] >= 10:
            files.append(write_csv(out / f"fan_income_g{g}.csv", ["age", *DECILE_HEADER, "example"],
                                   _fan_rows(ages, ratios)))
        summary.append([g, float(np.median(means)), stable_mean(means), means.size])
    if tr.n_paths >= 10:
        files.append(write_csv(out / "fan_h.csv", ["year", *DECILE_HEADER, "example"], _fan_rows(tr.years, tr.h)))
    files.append(write_csv(out / "generation_summary.csv", ["generation", "median", "mean", "n"], summary))
    return files


def run_steady_state(cfg: ExperimentConfig, out: Path) -> list[Path]:
    s = single_employer_base(cfg)
    args = (s.beta, s.target_h, cfg.params, cfg.table, s.strategy, s.join_age, s.retirement_age,
            s.survive_to_retirement)
    a1 = solve_contribution_rate_prop1(*args)
    a2 = solve_contribution_rate_recursive(*args)
    prof = steady_state_profile(replace(s, alpha=a1), cfg.params, cfg.table)
    ledger = out / "steady_state_ledger.csv"
    prof.to_csv(ledger)
    files = [write_csv(out / "alpha.csv", ["method", "alpha"], [["closed_form", a1], ["recursive", a2]]),
             write_csv(out / "steady_state_summary.csv", ["quantity", "value"],
                       [["pi_net", prof.pi_net], ["r_net", prof.r_net], ["balance_residual", prof.balance_residual],
                        ["relative_alpha_gap", abs(a1 - a2) / a1]]),
             ledger]
    return files


def _require_stochastic(cfg: ExperimentConfig, what: str):
    if cfg.model != "black_scholes":
        raise ConfigError(f"{cfg.source}: [economics] model: {what} needs model = black_scholes")


def run_pnl_surface(cfg: ExperimentConfig, out: Path) -> list[Path]:
    _require_stochastic(cfg, "pnl_surface")
    scheme = resolve_scheme(cfg)
    years = [t for t in cfg.get("experiment", "years") if 0 <= t < scheme.closure_year]
    if not years:
        raise ConfigError(f"{cfg.source}: [experiment] years: no year precedes closure")
    surf = pnl_surface(scheme, cfg.params, cfg.table, years, cfg.n_scenarios, cfg.seed, cfg.threads, cfg.horizon)
    files = [write_csv(out / "pnl_surface.csv", ["generation", "year", "pnl", "stderr", "n", "seed"], surf.rows())]
    if cfg.get("experiment", "lifetime"):
        lv = lifetime_q_values(scheme, cfg.params, cfg.table, cfg.n_scenarios, cfg.seed, cfg.threads, cfg.horizon)
        rows = [[g, e.mean, e.stderr, e.n] for g, e in zip(lv.generations, lv.estimates)]
        rows.append(["total", lv.total.mean, lv.total.stderr, lv.total.n])
        files.append(write_csv(out / "lifetime_values.csv", ["generation", "value", "stderr", "n"], rows))
    return files


def run_pnl_scenarios(cfg: ExperimentConfig, out: Path) -> list[Path]:
    _require_stochastic(cfg, "pnl_scenarios")
    scheme = resolve_scheme(cfg)
    t = cfg.get("experiment", "year")
    res = instantaneous_pnl_scenarios(scheme, cfg.params, cfg.table, t, cfg.n_scenarios,
                                      cfg.get("experiment", "n_inner"), cfg.seed, cfg.threads, cfg.horizon)
    rows = ([k, g, res.estimate[k, i], res.stderr[k, i]] for k in range(res.estimate.shape[0])
            for i, g in enumerate(res.generations))
    return [write_csv(out / "pnl_scenarios.csv", ["scenario", "generation", "pnl", "stderr"], rows)]


def run_compare(cfg: ExperimentConfig, out: Path) -> list[Path]:
    _require_stochastic(cfg, "compare")
    base = single_employer_base(cfg)
    schemes = cfg.get("experiment", "schemes")
    for s in schemes:
        if s not in SCHEMES:
            raise ConfigError(f"{cfg.source}: [experiment] schemes: unknown scheme {s!r}")
    res = compare_schemes(base, cfg.params, cfg.table, cfg.n_scenarios, cfg.seed,
                          cfg.get("experiment", "generations"), schemes, cfg.threads,
                          cfg.get("experiment", "normalize"))
    rows = [[s, x.generation, x.median, x.mean, x.n] for s in schemes for x in res.summaries(s)]
    return [write_csv(out / "comparison.csv", ["scheme", "generation", "median", "mean", "n"], rows)]


def run_shock(cfg: ExperimentConfig, out: Path) -> list[Path]:
    base = single_employer_base(cfg)
    summary, profile = [], []
    for shock in cfg.get("experiment", "shocks"):
        r = shock_sensitivity(base, cfg.params, cfg.table, shock)
        summary.append([shock, r.h_before, r.h_after, r.theta, r.regime])
        rel = r.relative_change
        profile.extend([shock, a, g, lb, la, rc] for a, g, lb, la, rc in
                       zip(r.ages, r.generations, r.liability_before, r.liability_after, rel))
    return [write_csv(out / "shock.csv", ["shock", "h_before", "h_after", "theta", "regime"], summary),
            write_csv(out / "shock_profile.csv",
                      ["shock", "age", "generation", "liability_before", "liability_after", "relative_change"],
                      profile)]


def run_shifted_returns(cfg: ExperimentConfig, out: Path) -> list[Path]:
    _require_stochastic(cfg, "shifted_returns")
    scheme = resolve_scheme(cfg)
    gens = cfg.get("experiment", "generations")
    rows = []
    for shift in [0.0, *cfg.get("experiment", "shifts")]:
        med = shifted_return_experiment(scheme, cfg.params, cfg.table, shift, cfg.n_scenarios, cfg.seed, gens,
                                        cfg.threads, cfg.get("experiment", "normalize"))
        rows.extend([shift, g, med[g]] for g in gens)
    return [write_csv(out / "shifted_returns.csv", ["shift", "generation", "median"], rows)]


# -- validation -----------------------------------------------------------------------

@dataclass
class Check:
    label: str
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""


def _check_target_lock(cfg: ExperimentConfig) -> Check:
    s = single_employer_base(cfg)
    H = default_horizon(s, cfg.table)
    tr = simulate_fund(s, cfg.params, cfg.table, constant_path(cfg.params, H))
    err = float(np.max(np.abs(tr.h[0, 1:s.closure_year] - s.target_h)))
    return Check("i", "constant model hits the target indexation", err < 1e-9, err, 1e-9)


def _check_lifetime_sum(cfg: ExperimentConfig, n: int) -> Check:
    s = single_employer_base(cfg)
    lv = lifetime_q_values(s, cfg.params, cfg.table, n, cfg.seed, cfg.threads)
    tol = 3.0 * lv.total.stderr + 1e-9
    return Check("ii", "lifetime values sum to zero", abs(lv.total.mean) <= tol, abs(lv.total.mean), tol,
                 f"n={n}, stderr={lv.total.stderr:.4g}")


def _check_comparators(cfg: ExperimentConfig) -> Check:
    s = single_employer_base(cfg)
    common = dict(join_age=s.join_age, retirement_age=s.retirement_age, closure_year=s.closure_year,
                  base_salary=s.base_salary, survive_to_retirement=s.survive_to_retirement)
    g = s.career_years + 20
    omega = cfg.table.terminal_age
    H = g + 1 + omega - s.retirement_age
    path = constant_path(cfg.params, H)
    real = {}
    for name, c, fn in (("dc", dc_config(s.alpha, **common), simulate_dc_annuity),
                        ("pooled", pooled_config(s.alpha, **common), simulate_pooled_annuity)):
        it = income_trace(fn(c, path, cfg.table, cfg.params, g), path, g, s.retirement_age, omega)
        real[name] = it.real_income[0]
    drift = max(float(np.ptp(v) / v[0]) for v in real.values())
    better = bool(real["pooled"][0] > real["dc"][0])
    return Check("iii", "comparators pay level real income; pooled beats DC", drift < 1e-9 and better, drift, 1e-9,
                 f"pooled/dc={real['pooled'][0] / real['dc'][0]:.4f}")


def _check_standin(cfg: ExperimentConfig) -> Check:
    s = single_employer_base(cfg)
    H = default_horizon(s, cfg.table)
    flat = replace(cfg.params, stock_volatility=0.0)
    bs = simulate_black_scholes_paths(flat, H, 1, cfg.seed)
    cp = constant_path(flat, H)
    d_path = float(np.max(np.abs(bs.stock_return - cp.stock_return)))
    a = simulate_fund(s, flat, cfg.table, bs)
    b = simulate_fund(s, flat, cfg.table, cp)
    d_h = float(np.max(np.abs(a.h - b.h)))
    # returns must agree to rounding; indexation only to the solver tolerance
    ok = d_path < 1e-12 and d_h < 1e-9
    return Check("iv", "zero-volatility Black-Scholes matches the constant model", ok, d_path, 1e-12,
                 f"returns {d_path:.3g} (< 1e-12), indexation {d_h:.3g} (< 1e-9)")


def _check_smoothing(cfg: ExperimentConfig, n: int) -> Check:
    s = single_employer_base(cfg)
    H = default_horizon(s, cfg.table)
    paths = simulate_black_scholes_paths(cfg.params, H, n, cfg.seed)
    tr = simulate_fund(s, cfg.params, cfg.table, paths)
    cut = s.closure_year
    sd_h = float(np.std(tr.h[:, 1:cut]))
    sd_r = float(np.std(paths.stock_return[:, 1:cut]))
    inside = bool(np.all(tr.h[:, 1:] <= s.h_plus + 1e-12))
    ok = inside and (sd_h < sd_r or sd_r == 0.0)
    return Check("v", "indexation is smoother than asset returns and respects the cap", ok, sd_h, sd_r,
                 f"sd(h)={sd_h:.4g}, sd(stock)={sd_r:.4g}")


def _check_residual(cfg: ExperimentConfig, n: int) -> Check:
    s = single_employer_base(cfg)
    H = default_horizon(s, cfg.table)
    paths = simulate_black_scholes_paths(cfg.params, H, n, cfg.seed)
    tr = simulate_fund(s, cfg.params, cfg.table, paths)
    rel = float(np.max(np.abs(tr.assets_post[:, -1]) / tr.peak_assets))
    return Check("vi", "residual assets vanish once all members have died", rel < 1e-9, rel, 1e-9, f"n={n}")


def _db_ratio_direct(n: int, r: float, i: float, g: float) -> float:
    """DB over riskless-DC first pension by stepping both accumulations (unit C and A)."""
    a = (1.0 + r) / (1.0 + i)
    B = n / sum(a ** k for k in range(n))
    b = f = 0.0
    for t in range(n):
        b = B * (1.0 + g) ** t + (1.0 + i) * b
        f = (1.0 + g) ** t + f * (1.0 + r)
    return (1.0 + i) * b / (f * (1.0 + r) / a ** n)


def _check_steady_state(cfg: ExperimentConfig) -> Check:
    s = single_employer_base(cfg)
    args = (s.beta, s.target_h, cfg.params, cfg.table, s.strategy, s.join_age, s.retirement_age,
            s.survive_to_retirement)
    a1 = solve_contribution_rate_prop1(*args)
    a2 = solve_contribution_rate_recursive(*args)
    gap = abs(a1 - a2) / a1
    bal = abs(steady_state_profile(replace(s, alpha=a1), cfg.params, cfg.table).balance_residual)
    p = cfg.params
    db = abs(db_to_dc_ratio(s.career_years, p.bond_growth, p.cpi, p.wage_growth)
             - _db_ratio_direct(s.career_years, p.bond_growth, p.cpi, p.wage_growth))
    err = max(gap, bal, db)
    return Check("viii", "closed-form and recursive steady states agree", err < 1e-8, err, 1e-8,
                 f"alpha gap={gap:.3g}, balance={bal:.3g}, db ratio={db:.3g}")


def db_equivalent_config(params: EconParams, table: LifeTable, **overrides) -> SchemeConfig:
    """All-risky fund with indexation pinned to CPI; prices like a DB scheme."""
    kw = dict(strategy=InvestmentStrategy.constant(1.0), h_plus=0.0, nominal_floor=params.cpi)
    kw.update(overrides)
    return calibrated_config(params, table, **kw)


def _check_db_pricing(cfg: ExperimentConfig, n: int) -> Check:
    s = single_employer_base(cfg)
    db = db_equivalent_config(cfg.params, cfg.table, join_age=s.join_age, retirement_age=s.retirement_age,
                              closure_year=s.closure_year, beta=s.beta)
    t = cfg.get("experiment", "pnl_year")
    est = pnl_by_age(db, cfg.params, cfg.table, t, n, cfg.seed, cfg.threads)
    z = 0.0
    for g, e in est.items():
        k = db.generation_age(g, t) - db.join_age
        ref = db_instantaneous_pnl(k, db.career_years, cfg.params.stock_growth, cfg.params.cpi)
        z = max(z, abs(e.mean - ref) / e.stderr if e.stderr > 0 else (0.0 if abs(e.mean - ref) < 1e-9 else math.inf))
    return Check("ix", "all-risky fund prices like DB", z <= 3.0, z, 3.0, f"max |z| over ages, n={n}, year={t}")


def run_validate(cfg: ExperimentConfig, out: Path) -> tuple[list[Path], bool]:
    n = cfg.get("experiment", "validation_scenarios")
    checks = [_check_target_lock(cfg), _check_lifetime_sum(cfg, n), _check_comparators(cfg), _check_standin(cfg),
              _check_smoothing(cfg, min(n, 1000)), _check_residual(cfg, min(n, 1000)), _check_steady_state(cfg),
              _check_db_pricing(cfg, n)]
    for c in checks:
        print(f"({c.label}) {'PASS' if c.passed else 'FAIL'}  {c.name}: measured {c.measured:.4g}, "
              f"threshold {c.threshold:.4g}{'  ' + c.detail if c.detail else ''}")
    path = write_csv(out / "validation.csv", ["check", "name", "passed", "measured", "threshold", "detail"],
                     ([c.label, c.name, c.passed, c.measured, c.threshold, c.detail] for c in checks))
    return [path], all(c.passed for c in checks)


RUNNERS = {
    "simulate": run_simulate,
    "steady_state": run_steady_state,
    "pnl_surface": run_pnl_surface,
    "pnl_scenarios": run_pnl_scenarios,
    "compare": run_compare,
    "shock": run_shock,
    "shifted_returns": run_shifted_returns,
}


def run_experiment(cfg: ExperimentConfig, out: Path | None = None) -> tuple[list[Path], bool]:
    """Run the configured experiment and write its manifest.

    Returns:
        Emitted files (manifest last) and whether validation checks passed.
    """
    kind = cfg.get("experiment", "kind")
    if kind is None:
        raise ConfigError(f"{cfg.source}: [experiment] kind: no experiment given")
    out = Path(out if out is not None else cfg.get("run", "out"))
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    if kind == "validate":
        files, ok = run_validate(cfg, out)
    else:
        files = RUNNERS[kind](cfg, out)
    meta = {"experiment": kind, "seed": cfg.seed, "spec_version": SPEC_VERSION, "version": __version__,
            "n_scenarios": _n(cfg)}
    files.append(write_manifest(out, files, meta))
    return files, ok


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdcsim", description="Simulate and value collective pension schemes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="experiment INI file")
        sp.add_argument("--out", help="output directory (overrides [run] out)")
        sp.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
        sp.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads, out=args.out, kind=args.experiment)
        files, ok = run_experiment(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleConfiguration, SolverError) as e:
        print(f"infeasible configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
