r"""The lassoes estimator: per-task least squares with a powered l1 penalty.

For each task ``i`` we minimise

.. math::
    \|y_i - X_i\beta_i\|_2^2 + \lambda\, N(\beta_i)^\alpha,
    \qquad N(\beta) = \|\beta\|_1 \ \text{(plain)} \ \text{or}\ 1 + \|\beta\|_1
    \ \text{(augmented)},

with ``alpha >= 1``.  Tasks interact only through the shared ``lambda``.

The solver is cyclic coordinate descent on the exact task objective.  Every
coordinate step is a one-dimensional convex problem: it is zero when
``|2 rho| <= lambda alpha K^(alpha-1)`` (``K`` being the l1 mass of the other
coordinates plus the offset) and otherwise the root of a monotone scalar
equation.  For ``alpha = 1`` this is ordinary soft-thresholding.  Because
``N**alpha`` is a convex increasing function of the l1 norm, coordinatewise
optimality is the full subgradient condition, and each sweep can only lower
the objective.

All tasks are swept together in vectorised form, but each task is frozen as
soon as it converges, so a task's fit does not depend on the others.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonConvergenceWarning
from .model import FitReport, check_coef


@dataclass(frozen=True)
class LassoesOptions:
    alpha: float = 2.0
    lam: float = 1.0
    norm_mode: str = "augmented"
    max_sweeps: int = 10000
    tol: float = 1e-9

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.norm_mode not in ("augmented", "plain"):
            raise ValueError("norm_mode must be 'augmented' or 'plain'")

    @property
    def offset(self):
        return 1.0 if self.norm_mode == "augmented" else 0.0


def _gram(dataset):
    G = np.stack([t.design.T @ t.design for t in dataset.tasks])
    c = np.stack([t.design.T @ t.response for t in dataset.tasks])
    yy = np.array([t.response @ t.response for t in dataset.tasks])
    return G, c, yy


def _penalty_slope(lam, alpha, norm):
    """``lam * alpha * norm**(alpha - 1)`` with ``0**0 = 1``."""
    if alpha == 1:
        return np.full_like(norm, lam)
    return lam * alpha * norm ** (alpha - 1)


def _task_objectives(B, G, c, yy, opts):
    Bt = B.T
    quad = yy - 2 * np.sum(c * Bt, axis=1) + np.einsum("ip,ipq,iq->i", Bt, G, Bt)
    norm = opts.offset + np.abs(Bt).sum(axis=1)
    return np.maximum(quad, 0.0) + opts.lam * norm**opts.alpha


def _coordinate_step(rho, d, K, lam, alpha):
    """Minimise ``d b^2 - 2 rho b + lam (K + |b|)^alpha`` for vectors of
    subproblems.  ``d`` may contain zeros (empty columns)."""
    b = np.zeros_like(rho)
    a = np.abs(rho)
    move = (d > 0) & (2 * a > _penalty_slope(lam, alpha, K))
    if not np.any(move):
        return b
    a, d_, K_ = a[move], d[move], K[move]
    if alpha == 1:
        t = (a - 0.5 * lam) / d_
    elif alpha == 2:
        t = (a - lam * K_) / (d_ + lam)
    else:
        t = _solve_shrinkage(a, d_, K_, lam, alpha)
    b[move] = np.sign(rho[move]) * np.maximum(t, 0.0)
    return b


def _solve_shrinkage(a, d, K, lam, alpha, iters=200):
    """Root of ``2 d t - 2 a + lam alpha (K + t)^(alpha-1) = 0`` on
    ``(0, a/d]`` by Newton steps kept inside a shrinking bracket."""
    lo = np.zeros_like(a)
    hi = a / d
    t = 0.5 * hi
    done = np.zeros(a.shape, dtype=bool)
    for _ in range(iters):
        base = K + t
        f = 2 * d * t - 2 * a + lam * alpha * base ** (alpha - 1)
        df = 2 * d + lam * alpha * (alpha - 1) * base ** (alpha - 2)
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - f / df
        inside = (newton > lo) & (newton < hi) & np.isfinite(newton)
        t_new = np.where(inside, newton, 0.5 * (lo + hi))
        # converged entries are frozen so each result is independent of the batch
        t_new = np.where(done, t, t_new)
        done |= (np.abs(t_new - t) <= 1e-15 * np.maximum(t_new, 1e-300)) | (f == 0)
        t = t_new
        if np.all(done):
            break
    return t


def fit_lassoes(dataset, opts=None, init=None):
    """Fit the lassoes estimator.

    Parameters
    ----------
    dataset : MultiTaskDataset
    opts : LassoesOptions
    init : ndarray of shape (p, n), optional
        Warm start.

    Returns
    -------
    B : ndarray of shape (p, n)
    report : FitReport
        ``objective`` holds the summed objective after every sweep
        (nonincreasing); ``kkt_residual`` the per-task subgradient residual.
    """
    opts = opts or LassoesOptions()
    p, n = dataset.p, dataset.n
    G, c, yy = _gram(dataset)
    report = FitReport(info={"norm_mode": opts.norm_mode, "alpha": opts.alpha,
                             "lambda": opts.lam})

    if opts.lam == 0:
        B = np.column_stack([np.linalg.lstsq(t.design, t.response, rcond=None)[0]
                             for t in dataset.tasks])
        report.objective = [float(_task_objectives(B, G, c, yy, opts).sum())]
        report.converged, report.termination = True, "least squares"
        report.kkt_residual = lassoes_kkt_residual(B, dataset, opts)
        return B, report

    Bt = np.zeros((n, p)) if init is None else check_coef(init, dataset).T.copy()
    q = np.einsum("ipq,iq->ip", G, Bt)
    d = np.einsum("ipp->ip", G)
    active = np.ones(n, dtype=bool)
    obj = _task_objectives(Bt.T, G, c, yy, opts)
    report.objective.append(float(obj.sum()))

    sweep = 0
    while np.any(active) and sweep < opts.max_sweeps:
        sweep += 1
        idx = np.flatnonzero(active)
        Ba, qa, Ga, ca, da = Bt[idx], q[idx], G[idx], c[idx], d[idx]
        before = Ba.copy()
        l1 = np.abs(Ba).sum(axis=1)
        for j in range(p):
            old = Ba[:, j].copy()
            rho = ca[:, j] - qa[:, j] + da[:, j] * old
            K = opts.offset + l1 - np.abs(old)
            new = _coordinate_step(rho, da[:, j], K, opts.lam, opts.alpha)
            delta = new - old
            if np.any(delta):
                Ba[:, j] = new
                qa += Ga[:, :, j] * delta[:, None]
                l1 = K - opts.offset + np.abs(new)
        Bt[idx], q[idx] = Ba, qa
        new_obj = _task_objectives(Ba.T, Ga, ca, yy[idx], opts)
        change = np.max(np.abs(Ba - before), axis=1)
        scale = np.maximum(1.0, np.max(np.abs(Ba), axis=1))
        rel = (obj[idx] - new_obj) / np.maximum(np.abs(new_obj), 1e-300)
        obj[idx] = new_obj
        finished = (change <= opts.tol * scale) & (rel <= opts.tol)
        active[idx[finished]] = False
        report.objective.append(float(obj.sum()))
        report.active_sizes.append(int(np.count_nonzero(Bt)))

    B = Bt.T.copy()
    report.iterations = sweep
    report.converged = not np.any(active)
    report.termination = "converged" if report.converged else "max iterations"
    report.kkt_residual = lassoes_kkt_residual(B, dataset, opts)
    if not report.converged:
        warnings.warn(f"lassoes did not converge in {sweep} sweeps",
                      NonConvergenceWarning, stacklevel=2)
    return B, report


def lassoes_objective(B, dataset, opts):
    G, c, yy = _gram(dataset)
    return float(_task_objectives(check_coef(B, dataset), G, c, yy, opts).sum())


def lassoes_kkt_residual(B, dataset, opts):
    """Per-task sup-norm distance from 0 to the subdifferential at ``B``."""
    B = check_coef(B, dataset)
    out = np.empty(dataset.n)
    for i, t in enumerate(dataset.tasks):
        beta = B[:, i]
        grad = -2 * t.design.T @ (t.response - t.design @ beta)
        norm = np.array([opts.offset + np.abs(beta).sum()])
        slope = _penalty_slope(opts.lam, opts.alpha, norm)[0]
        nz = beta != 0
        r_nz = np.abs(grad[nz] + slope * np.sign(beta[nz]))
        r_z = np.maximum(0.0, np.abs(grad[~nz]) - slope)
        out[i] = max(np.max(r_nz, initial=0.0), np.max(r_z, initial=0.0))
    return out


@dataclass
class LambdaPath:
    """Result of the data-driven lambda rule.

    ``crossed`` is False when ``g`` stayed below ``lambda**(-2/alpha)`` over
    the whole grid; ``lam`` is then the smallest grid value.
    """

    lam: float
    index: int
    crossed: bool
    lambdas: np.ndarray
    g: np.ndarray
    threshold: np.ndarray
    coefs: list = field(repr=False, default_factory=list)


def select_lambda_lassoes(dataset, alpha, grid, norm_mode="augmented",
                          warm_start=True, **opt_kw):
    """Walk down a decreasing lambda grid until the average squared l1 norm
    ``g(lam) = n^-1 sum_i ||beta_i||_1^2`` reaches ``lam ** (-2/alpha)``.

    Each fit warm-starts from the previous one unless ``warm_start=False``.
    The whole path is fitted so it can be inspected afterwards.
    """
    if alpha <= 2:
        raise ValueError("the selection rule needs alpha > 2")
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3 or np.any(np.diff(grid) >= 0):
        raise ValueError("grid must be strictly decreasing with at least 3 points")
    g = np.empty(grid.size)
    coefs = []
    B = None
    for k, lam in enumerate(grid):
        opts = LassoesOptions(alpha=alpha, lam=lam, norm_mode=norm_mode, **opt_kw)
        B, _ = fit_lassoes(dataset, opts, init=B if warm_start else None)
        coefs.append(B)
        g[k] = np.mean(np.abs(B).sum(axis=0) ** 2)
    threshold = grid ** (-2.0 / alpha)
    hits = np.flatnonzero(g >= threshold)
    if hits.size:
        k = int(hits[0])
        return LambdaPath(grid[k], k, True, grid, g, threshold, coefs)
    k = grid.size - 1
    return LambdaPath(grid[k], k, False, grid, g, threshold, coefs)
