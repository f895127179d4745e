"""Who pays whom inside a collective fund.

Prices each cohort's contribution at year 30 under the pricing measure
and compares an all-risky CPI-linked fund against the DB closed form.
Then values every generation's lifetime cashflows at time 0: the first
generations, who join a fund without a history, gain at the expense of
later ones, and the values sum to zero up to Monte Carlo error.

Takes about fifteen seconds.

    python3 demos/intergenerational_transfers.py
"""

import numpy as np

from cdcsim.cli import db_equivalent_config
from cdcsim.econmodel import EconParams
from cdcsim.lifetable import bundled_table
from cdcsim.steadystate import calibrated_config, db_instantaneous_pnl
from cdcsim.valuation import lifetime_q_values, pnl_by_age

table = bundled_table()
params = EconParams(stock_volatility=0.2)
cfg = calibrated_config(params, table)
t, n = 30, 2000

pnl = pnl_by_age(cfg, params, table, t, n, seed=1)
db = db_equivalent_config(params, table)
dbp = pnl_by_age(db, params, table, t, n, seed=1)
print(f"instantaneous P&L of the year-{t} contribution ({n} scenarios)")
print(f"{'age':>4} {'CDC':>8} {'DB-like':>8} {'DB formula':>10}")
for g in sorted(pnl, reverse=True)[::8] + [t]:
    age = cfg.generation_age(g, t)
    exact = db_instantaneous_pnl(age - cfg.join_age, cfg.career_years, params.stock_growth, params.cpi)
    print(f"{age:4d} {pnl[g].mean:+8.3f} {dbp[g].mean:+8.3f} {exact:+10.3f}")

lv = lifetime_q_values(cfg, params, table, n, seed=2)
print(f"\nlifetime values at time 0 ({n} scenarios), per unit of initial salary")
for g in (0, 10, 20, 39, 60, 100, 138):
    e = lv.by_generation(g)
    print(f"generation {g:3d}: {e.mean:+.3f} +/- {e.stderr:.3f}")
mid = (lv.generations >= 40) & (lv.generations <= 100)
print(f"generations 40..100 together: {lv.samples[:, mid].sum(axis=1).mean():+.2f}")
print(f"all generations: {lv.total.mean:+.3f} +/- {lv.total.stderr:.3f}")
