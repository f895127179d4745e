"""Steady state of the default single-employer fund.

Solves the contribution rate that pays CPI-linked pensions at 1/80th of
salary per year of service, prints the per-age ledger at a few ages, and
shows how a one-off asset shock moves the indexation rate.

    python3 demos/steady_state_tour.py
"""

import numpy as np

from cdcsim.econmodel import TABLE1
from cdcsim.lifetable import bundled_table
from cdcsim.steadystate import (calibrated_config, liability_h_sensitivity, shock_sensitivity,
                                solve_contribution_rate_recursive, steady_state_profile)

table = bundled_table()
cfg = calibrated_config(TABLE1, table)
alt = solve_contribution_rate_recursive(cfg.beta, cfg.target_h, TABLE1, table, cfg.strategy)
print(f"contribution rate: {cfg.alpha:.4%} (recursive solver: {alt:.4%})")

prof = steady_state_profile(cfg, TABLE1, table)
print(f"net risky share {prof.pi_net:.3f}, net return {prof.r_net:.4%}, balance residual {prof.balance_residual:.1e}")
print(f"{'age':>4} {'benefit':>9} {'survivors':>9} {'liability':>10} {'assets':>9}")
for age in (25, 45, 64, 65, 80, 100):
    k = int(np.searchsorted(prof.ages, age))
    print(f"{age:4d} {prof.benefit[k]:9.4f} {prof.survivors[k]:9.4f} {prof.liability[k]:10.4f} "
          f"{prof.assets_next[k]:9.4f}")

sens = liability_h_sensitivity(cfg, TABLE1, table)
print(f"liability sensitivity to h: {sens[0]:.1f} at age 25, {sens[cfg.career_years]:.1f} at retirement")

for shock in (0.10, -0.10):
    r = shock_sensitivity(cfg, TABLE1, table, shock)
    print(f"asset shock {shock:+.0%}: indexation {r.h_before:+.3%} -> {r.h_after:+.3%}")
