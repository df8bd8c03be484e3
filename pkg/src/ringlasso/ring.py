r"""RING lasso: least squares with a nuclear-norm (trace-norm) penalty.

.. math::
    \hat B = \arg\min_B \sum_i \|y_i - X_i\beta_i\|_2^2 + \lambda |||B|||_1

The solver is the adaptive-ridge iteration.  With ``A = B B'`` and
``W = A^{-1/2}``, the penalty is majorised by ``(1/2) tr(B' W B) + const``,
so every task is pulled towards the ridge solution

.. math::
    \beta_i \leftarrow (X_i'X_i + \tfrac{\lambda}{2} W)^{-1} X_i' y_i .

Tasks are visited in turn, each taking a damped step ``gamma * delta_i`` with
``delta_i`` the full ridge step from the current ``beta_i``.  ``A`` is kept
up to date by rank-one downdates/updates and ``W`` is recomputed from a fresh
eigendecomposition every ``svd_refresh_every`` tasks.  ``A`` gets a ridge
floor ``eps * I`` before the inverse square root so that early iterates, which
are nearly zero, stay well conditioned; ``eps`` starts at ``floor_start``
(relative to the mean eigenvalue of ``A``) and shrinks by ``floor_decay`` per
pass down to ``ridge_floor``.

The ridge iteration never sets a singular value exactly to zero, so its best
iterate is finished with up to ``polish_iters`` accelerated proximal-gradient
(singular-value thresholding) steps, kept only if they lower the objective.
``polish_iters=0`` leaves the bare ridge iteration.

When ``target_rank`` is set, ``lambda`` is multiplied or divided by
``lambda_factor`` once per pass according to how many coordinates
(``count_basis="coordinate"``) or eigen-directions (``"singular"``) carry a
mean square above ``zero_tol``.  After ``max_lambda_flips`` reversals of that
direction, ``lambda`` is frozen and the fit is run to convergence.  It is
also frozen if it falls to ``lambda_min_ratio`` times its starting value,
which happens when the target count cannot be reached.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, NonConvergenceWarning, SingularRidge
from .model import FitReport, check_coef
from .spectra import nuclear_norm, numerical_rank, sym_eig


@dataclass(frozen=True)
class RingOptions:
    lam: float = 1.0
    gamma: float = 0.5
    zero_tol: float = 1e-6
    target_rank: int | None = None
    lambda_factor: float = 1.1
    svd_refresh_every: int = 10
    init_scale: float = 1e-3
    max_passes: int = 500
    tol: float = 1e-8
    ridge_floor: float = 1e-10
    floor_start: float = 1.0
    floor_decay: float = 0.8
    count_basis: str = "coordinate"
    max_lambda_flips: int = 6
    lambda_min_ratio: float = 1e-6
    polish_iters: int = 5000
    polish_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.lambda_factor <= 1:
            raise ValueError("lambda_factor must exceed 1")
        if self.zero_tol <= 0:
            raise ValueError("zero_tol must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.count_basis not in ("coordinate", "singular"):
            raise ValueError("count_basis must be 'coordinate' or 'singular'")
        if not 0 < self.lambda_min_ratio < 1:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")
        if self.svd_refresh_every < 1:
            raise ValueError("svd_refresh_every must be >= 1")


@dataclass
class RingReport(FitReport):
    rank_trace: list = field(default_factory=list)
    lambda_trace: list = field(default_factory=list)
    lam: float = 0.0
    coordinate_count: int = 0
    singular_count: int = 0
    accumulation_drift: float = 0.0

    def to_dict(self):
        out = super().to_dict()
        kkt = self.kkt_residual
        if isinstance(kkt, KKTResiduals):
            out["kkt_residual"] = kkt.to_dict()
        out.update(rank_trace=list(self.rank_trace),
                   lambda_trace=[float(v) for v in self.lambda_trace],
                   lam=float(self.lam),
                   coordinate_count=int(self.coordinate_count),
                   singular_count=int(self.singular_count),
                   accumulation_drift=float(self.accumulation_drift))
        return out


def ring_objective(B, dataset, lam):
    B = check_coef(B, dataset)
    rss = sum(np.sum((t.response - t.design @ B[:, i]) ** 2)
              for i, t in enumerate(dataset.tasks))
    return float(rss + lam * nuclear_norm(B))


def score_matrix(dataset):
    """``(X_1'y_1, ..., X_n'y_n)``; ``B = 0`` is optimal iff ``lambda/2`` is at
    least its spectral norm."""
    return np.column_stack([t.design.T @ t.response for t in dataset.tasks])


def _floored_inv_sqrt(A, floor):
    p = A.shape[0]
    eps = max(floor * np.trace(A) / p, 1e-12)
    spec = sym_eig(A, psd=True)
    w = (spec.eigenvalues + eps) ** -0.5
    V = spec.eigenvectors
    return (V * w) @ V.T


def ridge_step(X, residual, A, lam, beta=None, floor=1e-10):
    """Adaptive-ridge direction for one task.

    Solves ``(X'X + lam/2 W) delta = X' residual - lam/2 W beta`` with
    ``W = (A + eps I)^{-1/2}``, ``eps = max(floor * tr(A)/p, 1e-12)``.  With
    ``residual = y - X beta`` this moves ``beta`` to the ridge solution
    ``(X'X + lam/2 W)^{-1} X'y``; ``beta=None`` means ``beta = 0``.
    """
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    p = X.shape[1]
    if A.shape != (p, p):
        raise DimensionMismatch(f"A has shape {A.shape}, expected {(p, p)}")
    G = X.T @ X
    rhs = X.T @ np.asarray(residual, dtype=float)
    if lam > 0:
        W = _floored_inv_sqrt(A, floor)
        G = G + 0.5 * lam * W
        if beta is not None:
            rhs = rhs - 0.5 * lam * W @ np.asarray(beta, dtype=float)
    return _solve_spd(G, rhs)


def _solve_spd(M, rhs):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularRidge("ridge system is not positive definite") from exc
    if np.min(np.diag(L)) ** 2 <= M.shape[0] * np.finfo(float).eps * np.max(np.diag(M)):
        raise SingularRidge("ridge system is numerically singular")
    z = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, z)


def _counts(B, A, zero_tol):
    n = B.shape[1]
    coord = int(np.count_nonzero(np.mean(B**2, axis=1) > zero_tol))
    sing = int(np.count_nonzero(np.linalg.eigvalsh(A / n) > zero_tol))
    return coord, sing


def fit_ring(dataset, opts=None, init=None):
    """Fit the RING lasso.

    Returns ``(B, report)`` where ``B`` is the lowest-objective iterate seen
    (at the final ``lambda``).  When ``target_rank`` is unset and
    ``lambda / 2`` is at least the spectral norm of :func:`score_matrix`,
    zero is optimal and is returned at once.
    """
    opts = opts or RingOptions()
    p, n = dataset.p, dataset.n
    X = dataset.designs()
    G = [Xi.T @ Xi for Xi in X]
    C = score_matrix(dataset)
    lam = float(opts.lam)
    report = RingReport(info={"kkt_convention": "half", "gamma": opts.gamma})
    tuning = opts.target_rank is not None

    if not tuning and lam > 0 and 0.5 * lam >= np.linalg.norm(C, 2):
        B = np.zeros((p, n))
        report.objective = [ring_objective(B, dataset, lam)]
        report.rank_trace, report.lambda_trace = [0], [lam]
        report.lam, report.converged, report.termination = lam, True, "zero certificate"
        report.kkt_residual = kkt_residuals(B, dataset, lam)
        return B, report

    if init is None:
        rng = np.random.Generator(np.random.Philox(opts.seed))
        B = rng.uniform(-opts.init_scale, opts.init_scale, size=(p, n))
    else:
        B = check_coef(init, dataset).copy()
    if lam == 0 or tuning:
        for i, Gi in enumerate(G):
            if lam == 0 and np.linalg.matrix_rank(Gi) < p:
                raise SingularRidge(f"task {i}: X'X is singular and lambda = 0")

    def objective(B):
        rss = sum(np.sum((t.response - Xi @ B[:, i]) ** 2)
                  for i, (t, Xi) in enumerate(zip(dataset.tasks, X)))
        return float(rss + lam * nuclear_norm(B))

    best_B, best_obj = B.copy(), objective(B)
    report.objective.append(best_obj)
    A = B @ B.T
    W = None
    visits = 0
    direction, flips = 0, 0
    drift = 0.0
    floor = opts.floor_start
    lam_lo = opts.lam * opts.lambda_min_ratio
    for npass in range(1, opts.max_passes + 1):
        before = B.copy()
        for i in range(n):
            if lam > 0 and visits % opts.svd_refresh_every == 0:
                A = B @ B.T
                W = _floored_inv_sqrt(A, floor)
            visits += 1
            beta = B[:, i]
            rhs = C[:, i] - G[i] @ beta
            if lam > 0:
                M = G[i] + 0.5 * lam * W
                rhs = rhs - 0.5 * lam * W @ beta
            else:
                M = G[i]
            delta = _solve_spd(M, rhs)
            A -= np.outer(beta, beta)
            beta = beta + opts.gamma * delta
            A += np.outer(beta, beta)
            B[:, i] = beta
        drift = max(drift, np.linalg.norm(A - B @ B.T) / (1 + np.linalg.norm(A)))

        floor = max(opts.ridge_floor, floor * opts.floor_decay)
        obj = objective(B)
        report.objective.append(obj)
        report.rank_trace.append(numerical_rank(B))
        report.lambda_trace.append(lam)
        if obj < best_obj:
            best_B, best_obj = B.copy(), obj

        if tuning and flips < opts.max_lambda_flips:
            coord, sing = _counts(B, B @ B.T, opts.zero_tol)
            count = coord if opts.count_basis == "coordinate" else sing
            step = 1 if count > opts.target_rank else -1
            if direction and step != direction:
                flips += 1
            direction = step
            lam = lam * opts.lambda_factor if step > 0 else lam / opts.lambda_factor
            if lam <= lam_lo:
                # the target cannot be reached (e.g. more targets than the
                # data support); stop before the ridge system degenerates
                lam, flips = lam_lo, opts.max_lambda_flips
                report.info["lambda_floor_reached"] = True
            if flips >= opts.max_lambda_flips:
                report.info["lambda_frozen_at_pass"] = npass
            best_B, best_obj = B.copy(), objective(B)
            continue

        change = np.max(np.abs(B - before))
        if change < opts.tol * max(1.0, np.max(np.abs(B))):
            report.converged = True
            break

    report.iterations = npass
    report.termination = "converged" if report.converged else "max passes"
    if lam > 0 and opts.polish_iters > 0 and np.any(best_B):
        B, steps, done = _polish(best_B, G, C, lam, opts.polish_iters, opts.polish_tol)
        report.info["polish_iterations"] = steps
        obj = objective(B)
        if obj <= best_obj:
            best_B, best_obj = B, obj
            report.objective.append(obj)
            report.converged = report.converged or done
            report.termination = "converged" if report.converged else report.termination
    report.lam = lam
    report.accumulation_drift = float(drift)
    report.coordinate_count, report.singular_count = _counts(
        best_B, best_B @ best_B.T, opts.zero_tol)
    report.kkt_residual = kkt_residuals(best_B, dataset, lam)
    if not report.converged:
        warnings.warn(f"RING lasso did not converge in {npass} passes",
                      NonConvergenceWarning, stacklevel=2)
    return best_B, report


def _svt(Z, tau):
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    r = int(np.count_nonzero(s))
    return (U[:, :r] * s[:r]) @ Vt[:r]


def _polish(B, G, C, lam, iters, tol):
    """Accelerated proximal-gradient finish from ``B``.

    The adaptive ridge never sets a singular value exactly to zero and slows
    down once the weights of the vanishing directions blow up; a few
    singular-value-thresholding steps from its output recover the exact rank
    and tighten the stationarity conditions.  Momentum is restarted whenever
    the objective goes up.
    """
    step = 1.0 / (2.0 * max(np.linalg.eigvalsh(Gi)[-1] for Gi in G))
    Gs = np.stack(G)

    def grad(Z):
        return 2.0 * (np.einsum("ipq,qi->pi", Gs, Z) - C)

    def smooth(Z):
        return float(np.einsum("pi,ipq,qi->", Z, Gs, Z) - 2.0 * np.sum(C * Z))

    def total(Z):
        return smooth(Z) + lam * nuclear_norm(Z)

    x, y, t = B.copy(), B.copy(), 1.0
    fx = total(x)
    for k in range(1, iters + 1):
        x_new = _svt(y - step * grad(y), step * lam)
        f_new = total(x_new)
        if t > 1.0 and f_new > fx + 1e-14 * abs(fx):
            # restart momentum from the last iterate; a plain step from x is
            # always taken, so round-off near the optimum cannot stall the loop
            y, t = x.copy(), 1.0
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        change = np.max(np.abs(x_new - x))
        x, fx, t = x_new, f_new, t_new
        if change <= tol * max(1.0, np.max(np.abs(x))):
            return x, k, True
    return x, iters, False


@dataclass(frozen=True)
class KKTResiduals:
    """Optimality certificate of a RING fit.

    ``active`` has one residual per retained singular direction (should be
    near 0); ``inactive_slack`` is the spectral norm of the residual score
    matrix restricted to the complement of the singular spaces, minus
    ``lambda/2`` (should be <= 0), or ``None`` when there is no complement.
    """

    active: np.ndarray
    inactive_slack: float | None
    score_norm: float
    lam: float
    rank: int

    def passes(self, active_tol=None, inactive_tol=None):
        active_tol = 1e-4 * (1 + self.score_norm) if active_tol is None else active_tol
        inactive_tol = 1e-4 * self.lam if inactive_tol is None else inactive_tol
        ok = bool(np.all(self.active <= active_tol))
        if self.inactive_slack is not None:
            ok &= self.inactive_slack <= inactive_tol
        return ok

    def to_dict(self):
        return {"active": self.active.tolist(), "inactive_slack": self.inactive_slack,
                "score_norm": self.score_norm, "lambda": self.lam, "rank": self.rank,
                "passes": self.passes()}


def kkt_residuals(B, dataset, lam, rank_tol=1e-6):
    """Check the subgradient conditions of the RING objective at ``B``.

    With ``R = (X_i'(y_i - X_i beta_i))_i`` and the SVD ``B = U S V'`` over
    singular values above ``rank_tol * s_max``, stationarity requires
    ``U'R = lambda/2 V'``, ``R V = lambda/2 U`` and
    ``||(I - UU') R (I - VV')||_2 <= lambda/2``.
    """
    B = check_coef(B, dataset)
    R = np.column_stack([t.design.T @ (t.response - t.design @ B[:, i])
                         for i, t in enumerate(dataset.tasks)])
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    r = 0 if s.size == 0 or s[0] == 0 else int(np.count_nonzero(s > rank_tol * s[0]))
    Ua, Va = U[:, :r], Vt[:r].T
    half = 0.5 * lam
    left = np.linalg.norm(Ua.T @ R - half * Va.T, axis=1)
    right = np.linalg.norm(R @ Va - half * Ua, axis=0)
    active = np.maximum(left, right)
    p, n = B.shape
    if r < min(p, n):
        Rp = R - Ua @ (Ua.T @ R)
        Rp = Rp - (Rp @ Va) @ Va.T
        slack = float(np.linalg.norm(Rp, 2) - half)
    else:
        slack = None
    return KKTResiduals(active=active, inactive_slack=slack,
                        score_norm=float(np.linalg.norm(R)), lam=float(lam), rank=r)


def rank_path(dataset, lambda_grid, opts=None, rel_tol=1e-6):
    """Warm-started fits along an increasing lambda grid.

    Returns a list of ``(lambda, numerical rank, B)`` tuples.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing with >= 2 points")
    opts = opts or RingOptions()
    out = []
    B = None
    for lam in grid:
        fit_opts = RingOptions(**{**opts.__dict__, "lam": float(lam), "target_rank": None})
        init = B if B is not None and np.any(B) else None
        B, _ = fit_ring(dataset, fit_opts, init=init)
        out.append((float(lam), numerical_rank(B, rel_tol), B))
    return out
