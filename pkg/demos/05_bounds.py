"""
Evaluating the oracle bounds
============================

Bounds are plain functions of their inputs.  Here a rank-2 problem with an
isometric design (kappa = 1) is fitted with the prescribed
lambda = 4 sigma sqrt((A + 1) m n p) and the observed prediction error and
rank are compared with the bound.
"""

import json

import numpy as np

from ringlasso import MultiTaskDataset, RingOptions, bound_persistence, bound_ring, fit_ring

rng = np.random.default_rng(5)
n, p, m, sigma, A = 10, 5, 20, 1.0, 1.5

X = np.stack([np.linalg.qr(rng.normal(size=(m, p)))[0] * np.sqrt(m) for _ in range(n)])
B = rng.normal(size=(p, 2)) @ rng.normal(size=(2, n))
y = np.einsum("imp,pi->im", X, B) + sigma * rng.normal(size=(n, m))
ds = MultiTaskDataset.from_arrays(X, y)

bound = bound_ring(s=2, p=p, n=n, m=m, sigma=sigma, A=A, kappa=1.0)
Bh, _ = fit_ring(ds, RingOptions(lam=bound.inputs["lam"]))
pred = sum(np.sum((X[i] @ (Bh[:, i] - B[:, i])) ** 2) for i in range(n)) / (m * n)
report = bound_ring(2, p, n, m, sigma, A, 1.0,
                    observed={"prediction": pred, "rank": int(np.linalg.matrix_rank(Bh, 1e-6))})
print(json.dumps(report.to_dict(), indent=1))

# the persistence bound shrinks like m^{-3/2}
for mm in (10**2, 10**4, 10**6):
    print(f"m={mm:>8d}: persistence bound {bound_persistence(1.0, 10, 4, mm, 0.05).parts['persistence']:.2e}")
