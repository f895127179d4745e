"""CDC against DC with annuity purchase when returns are deterministic.

Three contracts are compared for generation 60 (a full career). A and B
differ in career length and de-risking ages; C keeps B's ages but the
collective fund never de-risks. In the constant model the CDC fund hits
its target exactly, so its ratio depends only on the accrual rate, while
the DC member's result depends on how the contribution rate compares to
the cost of an annuity.

    python3 demos/constant_model_comparison.py
"""

from cdcsim.analytics import constant_model_ratios
from cdcsim.econmodel import TABLE1, InvestmentStrategy
from cdcsim.lifetable import bundled_table
from cdcsim.steadystate import calibrated_config

table = bundled_table()
contracts = {
    "A": dict(join_age=25, retirement_age=65, derisk=(65, 85)),
    "B": dict(join_age=18, retirement_age=67, derisk=(67, 87)),
    "C": dict(join_age=18, retirement_age=67, derisk=(None, None)),
}

print(f"{'':2} {'alpha':>7} {'CDC':>7} {'DC':>7} {'CDC/DC - 1':>11}")
for name, c in contracts.items():
    lo, hi = c["derisk"]
    strat = InvestmentStrategy.lifestyle(lo, hi, min_age=0, max_age=121)
    cfg = calibrated_config(TABLE1, table, join_age=c["join_age"], retirement_age=c["retirement_age"],
                            strategy=strat)
    r = constant_model_ratios(cfg, TABLE1, table, generation=60)
    print(f"{name:2} {cfg.alpha:7.3%} {r['cdc']:7.4f} {r['dc']:7.4f} {r['cdc'] / r['dc'] - 1:+11.1%}")
