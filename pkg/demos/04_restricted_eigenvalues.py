"""
Restricted-eigenvalue constants
===============================

The oracle inequalities are stated in terms of a restricted-eigenvalue
constant kappa.  For small p it can be computed by enumerating supports;
for the subspace version only a sampled (upper) estimate is available.
"""

import numpy as np

from ringlasso import MultiTaskDataset, design_constants, re2_constant, re_constant

rng = np.random.default_rng(0)

# an isometric design: X'X = m I gives kappa = 1 for every s
Q, _ = np.linalg.qr(rng.normal(size=(12, 5)))
X = Q * np.sqrt(12)
print("isometric design    :", re_constant([X, X], s=2))

# a generic Gaussian design
Xs = [rng.normal(size=(12, 5)) for _ in range(3)]
for s in (1, 2, 3):
    est = re_constant(Xs, s=s)
    print(f"gaussian, s={s}       : kappa={est.kappa:.4f} certified={est.certified}"
          f" support={est.support}")
print("subspace version s=2:", round(re2_constant(Xs, s=2, n_samples=500).kappa, 4),
      "(sampled, never certified)")

# a repeated column lives in the kernel of the cone: kappa = 0
Xd = Xs[0].copy()
Xd[:, 1] = Xd[:, 0]
print("duplicated column   :", re_constant([Xd], s=1, c0=1.0).kappa)

ds = MultiTaskDataset.from_arrays(Xs, [np.zeros(12)] * 3)
print("design constants    :", design_constants(ds))
