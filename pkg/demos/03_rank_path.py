"""
The RING rank path
==================

As lambda grows the RING fit loses rank, one direction at a time, until the
zero certificate lambda / 2 >= ||(X_i' y_i)_i||_2 makes B = 0 optimal.
"""

import numpy as np

from ringlasso import SimConfig, gen_decay, kkt_residuals, rank_path, score_matrix

ds, _ = gen_decay(SimConfig(n=20, p=20, m=25, seed=3))
top = 2 * np.linalg.norm(score_matrix(ds), 2)  # zero certificate threshold
grid = top * np.geomspace(0.02, 1.05, 8)

print(f"{'lambda':>10}{'rank':>6}{'KKT':>6}")
for lam, rank, B in rank_path(ds, grid):
    ok = kkt_residuals(B, ds, lam).passes()
    print(f"{lam:>10.2f}{rank:>6d}{'ok' if ok else 'FAIL':>6}")
