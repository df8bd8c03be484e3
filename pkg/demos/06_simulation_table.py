"""
Simulation table
================

For each m: draw the decay design, fit RING with lambda tuned towards
8 active coordinates, and average the relative sup-norm errors of the
coefficients (L_par) and fitted values (L_pre) over replicates.  Pass
``--full`` for the n = p = 60, 5-replicate setting (about half a minute).
"""

import sys

from ringlasso import SimConfig, run_table1

full = "--full" in sys.argv
cfg = SimConfig(n=60, p=60, seed=42) if full else SimConfig(n=30, p=30, seed=42)
reps = 5 if full else 2

print(f"n=p={cfg.n}, {reps} replicates")
print(f"{'m':>5}{'L_par':>16}{'L_pre':>16}")
for row in run_table1(cfg, m_values=(5, 25, 100), replicates=reps):
    print(f"{row.m:>5}{row.L_par_mean:>9.3f} ({row.L_par_sd:.3f}){row.L_pre_mean:>9.3f} ({row.L_pre_sd:.3f})")
