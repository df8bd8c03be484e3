"""
Trace norm basics
=================

The RING penalty is the trace (nuclear) norm of the p x n coefficient
matrix: the sum of its singular values.  Unlike the group lasso's sum of
row norms it does not care which basis the variables are written in.
"""

import numpy as np

from ringlasso import lpq_norm, nuclear_norm, psd_power

rng = np.random.default_rng(0)
B = rng.normal(size=(5, 8))  # 5 variables, 8 tasks

# %% sum of singular values == trace of (B B')^{1/2}
print("nuclear norm          :", nuclear_norm(B))
print("trace of (BB')^(1/2)  :", np.trace(psd_power(B @ B.T, 0.5)))

# %% rotating the variables leaves it alone ...
Q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
print("after a rotation      :", nuclear_norm(Q @ B))

# %% ... but changes the group (l2,1) norm, which is never smaller
norms = [lpq_norm(np.linalg.qr(rng.normal(size=(5, 5)))[0] @ B, 2, 1) for _ in range(2000)]
print("l2,1 over 2000 random rotations: min %.4f  max %.4f" % (min(norms), max(norms)))

# the left singular vectors are the rotation that attains the minimum
U = np.linalg.svd(B)[0]
print("l2,1 in the singular basis     : %.4f" % lpq_norm(U.T @ B, 2, 1))
