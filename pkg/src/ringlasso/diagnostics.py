r"""Restricted-eigenvalue constants and simple design constants.

The RE constant of a multi-task design is

.. math::
    \kappa = \min \Bigl\{ \frac{\|X^T\Delta\|_2}{\sqrt m\,\|\Delta_J\|_2} :
    |J| \le s,\ \|\Delta_{J^c}\|_{q,1} \le c_0 \|\Delta_J\|_{q,1} \Bigr\},

with ``Delta`` a ``(p, n)`` matrix and ``||X' Delta||_2^2 = sum_i ||X_i
Delta_i||^2``.  The ``(q, 1)`` norm groups rows (one variable across tasks),
so ``q = 1`` is the plain l1 norm.  Supports are shared by all tasks.

Given a support the cone is still not convex, so the ratio is minimised by
projected gradient from many random starts: ``||Delta_J||_2`` is normalised
to one and ``Delta_{J^c}`` projected onto the admissible ``(q, 1)`` ball.
The subspace version (RE2) replaces ``J`` by a random subspace and the
``(q, 1)`` norms by trace norms.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .simgen import rng_from_seed


@dataclass(frozen=True)
class REEstimate:
    s: int
    c0: float
    q: object
    kappa: float
    certified: bool
    method: str
    support: tuple = ()
    shared_support: bool = False
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.certified and self.method != "enumeration":
            raise ValueError("only enumeration results can be certified")

    def to_dict(self):
        return {"s": self.s, "c0": self.c0, "q": self.q, "kappa": self.kappa,
                "certified": self.certified, "method": self.method,
                "support": list(self.support), "shared_support": self.shared_support}


def _blocks(X_blocks):
    blocks = [np.asarray(X, dtype=float) for X in X_blocks]
    p = blocks[0].shape[1]
    if any(X.ndim != 2 or X.shape[1] != p for X in blocks):
        raise ValueError("design blocks must be 2-d with a common column count")
    # scale each task by 1/sqrt(m_i) so the ratio is ||X Delta||_2 / ||Delta_J||
    return np.stack([X.T @ X / X.shape[0] for X in blocks])


def _project_l1_ball(v, radius):
    """Euclidean projection of each row of ``v`` (>= 0) onto the l1 ball of
    the matching ``radius``; standard sort-and-threshold."""
    inside = v.sum(axis=1) <= radius
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - radius[:, None]
    k = np.arange(1, v.shape[1] + 1)
    cond = u - css / k > 0
    rho = v.shape[1] - np.argmax(cond[:, ::-1], axis=1) - 1
    theta = np.maximum(css[np.arange(v.shape[0]), rho] / (rho + 1), 0.0)
    out = np.maximum(v - theta[:, None], 0.0)
    out[inside] = v[inside]
    return out


def _normalize(D):
    # a batch member with vanishing norm has no direction; NaN marks it so
    # the descent loop rejects the step that produced it
    norm = np.linalg.norm(D, axis=(1, 2))
    norm = np.where(norm > 1e-150, norm, np.nan)
    return D / norm[:, None, None]


def _group_norms(D, q):
    # D: (batch, rows, n); returns per-row l_q norms
    return np.abs(D).sum(axis=2) if q == 1 else np.linalg.norm(D, axis=2)


def _project_cone(D, J, Jc, c0, q):
    """Normalise ``D_J`` to unit Frobenius norm and pull ``D_{J^c}`` into the
    ball ``||.||_{q,1} <= c0 ||D_J||_{q,1}``."""
    DJ = _normalize(D[:, J])
    out = np.zeros_like(D)
    out[:, J] = DJ
    if Jc.size:
        radius = c0 * _group_norms(DJ, q).sum(axis=1)
        Dc = D[:, Jc]
        if q == 1:
            flat = Dc.reshape(Dc.shape[0], -1)
            mag = _project_l1_ball(np.abs(flat), radius)
            out[:, Jc] = (np.sign(flat) * mag).reshape(Dc.shape)
        else:
            norms = np.linalg.norm(Dc, axis=2)
            new = _project_l1_ball(norms, radius)
            scale = np.divide(new, norms, out=np.zeros_like(norms), where=norms > 0)
            out[:, Jc] = Dc * scale[:, :, None]
    return out


def _quad(G, D):
    # sum_i Delta_i' G_i Delta_i for a batch of (p, n) matrices
    return np.einsum("bpi,ipq,bqi->b", D, G, D)


def _grad(G, D):
    return 2 * np.einsum("ipq,bqi->bpi", G, D)


def _projected_descent(G, D, project, steps, step0, rtol=1e-12):
    """Accelerated projected gradient on ``f(D) = sum_i D_i' G_i D_i`` for a
    batch of starting points.

    Each start keeps its own step and momentum.  A step that fails to improve
    first drops the momentum; if a plain step from the current point also
    fails, the step is halved.  A start stops once its step has collapsed.
    """
    D = project(D)
    f = np.nan_to_num(_quad(G, D), nan=np.inf)
    step = np.full(D.shape[0], float(step0))
    t = np.ones(D.shape[0])
    Y = D
    for _ in range(steps):
        trial = project(Y - step[:, None, None] * _grad(G, Y))
        ft = _quad(G, trial)
        better = ft < f - rtol * np.abs(f)
        plain = t == 1.0
        t_new = np.where(better, 0.5 * (1 + np.sqrt(1 + 4 * t * t)), 1.0)
        mom = np.where(better, (t - 1) / t_new, 0.0)[:, None, None]
        Y = np.where(better[:, None, None], trial + mom * (trial - D), D)
        D = np.where(better[:, None, None], trial, D)
        f = np.where(better, ft, f)
        step = np.where(better | ~plain, step, 0.5 * step)
        t = t_new
        if np.all(step < 1e-12):
            break
    return D, f


def _step0(G, step):
    # the nominal step is in units of 1/L, L = 2 phi_max the gradient's
    # Lipschitz constant, so it is scale free
    top = max(np.linalg.eigvalsh(Gi)[-1] for Gi in G)
    return step / max(2 * top, 1e-300)


def re_constant(X_blocks, s, c0=3.0, q=1, restarts=64, steps=2000, step=1.0,
                seed=0, max_supports=200):
    """Estimate the restricted-eigenvalue constant.

    For ``p <= 12`` every support of size ``1..s`` is enumerated; otherwise
    ``max_supports`` random supports are drawn.  ``certified`` is True only
    for enumeration and when the two best starts on the minimising support
    agree to ``1e-4``.

    Parameters
    ----------
    X_blocks : sequence of (m_i, p) arrays
    s : int
        Support size bound.
    c0 : float
        Cone constant.
    q : {1, 2}
        Row-norm exponent of the cone.
    restarts, steps, step :
        Projected-gradient settings; ``step`` is measured in units of
        ``1 / (2 phi_max)``, where ``phi_max`` is the largest eigenvalue of
        the normalised Gram matrices.
    """
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    G = _blocks(X_blocks)
    n, p = G.shape[0], G.shape[1]
    if not 1 <= s <= p:
        raise ValueError("s must lie in 1..p")
    step0 = _step0(G, step)
    enumerate_all = p <= 12
    if enumerate_all:
        supports = [J for k in range(1, s + 1)
                    for J in itertools.combinations(range(p), k)]
    else:
        rng = rng_from_seed(seed, 1)
        supports = [tuple(sorted(rng.choice(p, size=int(rng.integers(1, s + 1)),
                                            replace=False)))
                    for _ in range(max_supports)]

    best = (np.inf, (), None)
    for J in supports:
        Ja = np.array(J)
        Jc = np.setdiff1d(np.arange(p), Ja)
        # seed depends on the support only, so results nest across s
        rng = rng_from_seed(seed, 2 + support_code(J))
        D0 = rng.normal(size=(restarts, p, n))
        project = (lambda D, Ja=Ja, Jc=Jc: _project_cone(D, Ja, Jc, c0, q))
        _, f = _projected_descent(G, D0, project, steps, step0)
        f = np.sort(np.maximum(f, 0.0))
        if f[0] < best[0]:
            best = (f[0], J, f)
    ratio = np.sqrt(best[2])
    agree = ratio.size > 1 and ratio[1] - ratio[0] <= 1e-4
    return REEstimate(s=s, c0=c0, q=q, kappa=float(ratio[0]),
                      certified=bool(enumerate_all and agree),
                      method="enumeration" if enumerate_all else "sampled",
                      support=tuple(int(j) for j in best[1]), shared_support=n > 1,
                      info={"supports": len(supports), "restarts": restarts})


def support_code(J):
    """Bit mask of a support, used to derive its random stream."""
    return sum(1 << int(j) for j in J) % (1 << 62)


def _project_nuclear_ball(M, radius):
    U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    new = _project_l1_ball(sv, radius)
    return np.einsum("bpk,bk,bkn->bpn", U, new, Vt)


def re2_constant(X_blocks, s, c0=3.0, n_samples=500, steps=200, step=1.0,
                 seed=0, batch=250):
    """Heuristic (never certified) estimate of the subspace RE constant.

    Samples ``n_samples`` Haar-random ``s``-dimensional subspaces ``V`` with
    one random start each and refines every start by projected gradient
    (``||P_V Delta||_F = 1``, ``|||(I-P_V) Delta|||_1 <= c0 |||P_V Delta|||_1``).
    Samples are drawn from one stream in order, so a larger ``n_samples``
    extends a smaller one and the estimate can only go down.
    """
    G = _blocks(X_blocks)
    n, p = G.shape[0], G.shape[1]
    if not 1 <= s <= p:
        raise ValueError("s must lie in 1..p")
    step0 = _step0(G, step)
    rng = rng_from_seed(seed, 7)
    best = np.inf
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        frames = rng.normal(size=(b, p, s))
        D0 = rng.normal(size=(b, p, n))
        Q, _ = np.linalg.qr(frames)
        P = Q @ np.swapaxes(Q, 1, 2)
        Pc = np.eye(p) - P

        def project(D, P=P, Pc=Pc):
            DV = _normalize(P @ D)
            radius = c0 * np.linalg.svd(DV, compute_uv=False).sum(axis=1)
            Dc = _project_nuclear_ball(Pc @ D, radius)
            return DV + Pc @ Dc

        _, f = _projected_descent(G, D0, project, steps, step0)
        best = min(best, float(np.sqrt(max(np.min(f), 0.0))))
        done += b
    return REEstimate(s=s, c0=c0, q="subspace", kappa=best, certified=False,
                      method="sampled", info={"samples": n_samples})


def design_constants(dataset, tol=1e-8):
    """``phi_max`` (largest eigenvalue over tasks of ``X_i'X_i/m_i``), the
    column and task energies ``Lambda_x``, ``tilde_Lambda_x`` and whether
    every column satisfies ``sum_j x^2 = m``."""
    phi = max(float(np.linalg.eigvalsh(t.design.T @ t.design / t.m)[-1])
              for t in dataset.tasks)
    col = np.sum([np.sum(t.design**2, axis=0) for t in dataset.tasks], axis=0)
    task = [float(np.sum(t.design**2)) for t in dataset.tasks]
    return {"phi_max": phi,
            "Lambda_x": float(np.sqrt(np.max(col))),
            "tilde_Lambda_x": float(np.sqrt(max(task))),
            "column_normalized": dataset.is_column_normalized(tol)}
