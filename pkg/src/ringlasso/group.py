r"""Group lasso by block coordinate descent over the rows of ``B``.

Objective (row ``l`` of ``B`` holds variable ``l`` across all tasks):

.. math::
    \sum_i \|y_i - X_i\beta_i\|_2^2 + \lambda \sum_l \|b_l\|_2 .

With the other rows fixed, row ``l`` has the closed form

.. math::
    b_{li} = \frac{a_i}{\mu_l + d_i},\qquad
    a_i = \sum_j x_{ijl}\tilde Y_{ijl},\quad d_i = \sum_j x_{ijl}^2,

where the shrinkage multiplier ``mu_l = lambda / (2 ||b_l||)`` is the unique
root of the increasing equation

.. math::
    (\lambda/2)^2 = \sum_i \Bigl(\frac{\mu a_i}{\mu + d_i}\Bigr)^2 ,

and the whole row is zero when ``(lambda/2)^2 >= sum_i a_i^2``.  The factor
``1/2`` comes from differentiating the squared loss; with it, the fixed point
is exactly stationary for the objective above.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import NonConvergenceWarning
from .model import FitReport, check_coef, lpq_norm

#: Returned by :func:`lambda_star` when the row is annihilated.
BLOCK_ZERO = math.inf


@dataclass(frozen=True)
class GroupOptions:
    lam: float = 1.0
    max_sweeps: int = 1000
    tol: float = 1e-9

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def _rhs(mu, a, d):
    return np.sum((mu * a / (mu + d)) ** 2)


def lambda_star(a, d, lam, rtol=1e-12):
    """Shrinkage multiplier of one row, or :data:`BLOCK_ZERO`.

    ``a`` are the per-task inner products of the column with the partial
    residual and ``d`` the column energies.  The root is bracketed by
    doubling and refined by bisection to ``rtol`` relative width.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    target = (0.5 * lam) ** 2
    if lam == 0:
        return 0.0
    if target >= np.sum(a**2):
        return BLOCK_ZERO
    upper = max(1.0, float(np.max(d)))
    while _rhs(upper, a, d) < target:
        upper *= 2.0
    lower = 0.0
    while upper - lower > rtol * upper:
        mid = 0.5 * (lower + upper)
        if _rhs(mid, a, d) < target:
            lower = mid
        else:
            upper = mid
    return 0.5 * (lower + upper)


@dataclass(frozen=True)
class ZeroCertificate:
    """``holds`` is True when every row is certified zero at ``B = 0``.

    ``margins`` use the ``(lambda/2)^2`` threshold that matches the objective;
    ``raw_margins`` use ``lambda^2`` as in the original estimating equation.
    """

    holds: bool
    margins: np.ndarray
    raw_margins: np.ndarray


def _row_scores(dataset):
    C = np.column_stack([t.design.T @ t.response for t in dataset.tasks])
    return np.sum(C**2, axis=1)


def zero_certificate(dataset, lam):
    score = _row_scores(dataset)
    margins = (0.5 * lam) ** 2 - score
    return ZeroCertificate(bool(np.all(margins >= 0)), margins, lam**2 - score)


def group_objective(B, dataset, lam):
    B = check_coef(B, dataset)
    rss = sum(np.sum((t.response - t.design @ B[:, i]) ** 2)
              for i, t in enumerate(dataset.tasks))
    return float(rss + lam * lpq_norm(B, 2, 1, axis="rows"))


def fit_group(dataset, opts=None, init=None):
    """Fit the group lasso; returns ``(B, report)``.

    ``report.info["mu"]`` holds the final shrinkage multiplier of every row
    (``inf`` for zero rows).
    """
    opts = opts or GroupOptions()
    p, n = dataset.p, dataset.n
    X = dataset.designs()
    B = np.zeros((p, n)) if init is None else check_coef(init, dataset).copy()
    R = [t.response - Xi @ B[:, i] for i, (t, Xi) in enumerate(zip(dataset.tasks, X))]
    d = np.array([[np.dot(Xi[:, l], Xi[:, l]) for Xi in X] for l in range(p)])
    mu = np.full(p, BLOCK_ZERO)
    report = FitReport(info={"lambda": opts.lam})

    def objective():
        rss = sum(r @ r for r in R)
        return float(rss + opts.lam * np.sum(np.linalg.norm(B, axis=1)))

    obj = objective()
    report.objective.append(obj)
    for sweep in range(1, opts.max_sweeps + 1):
        before = B.copy()
        for l in range(p):
            a = np.array([X[i][:, l] @ R[i] for i in range(n)]) + d[l] * B[l]
            mu[l] = lambda_star(a, d[l], opts.lam)
            if mu[l] == BLOCK_ZERO:
                new = np.zeros(n)
            else:
                denom = mu[l] + d[l]
                new = np.divide(a, denom, out=np.zeros(n), where=denom > 0)
            delta = new - B[l]
            if np.any(delta):
                for i in np.flatnonzero(delta):
                    R[i] -= X[i][:, l] * delta[i]
                B[l] = new
        new_obj = objective()
        report.objective.append(new_obj)
        report.active_sizes.append(int(np.count_nonzero(np.any(B != 0, axis=1))))
        change = np.max(np.abs(B - before))
        rel = (obj - new_obj) / max(abs(new_obj), 1e-300)
        obj = new_obj
        if change <= opts.tol * max(1.0, np.max(np.abs(B))) and rel <= opts.tol:
            report.converged = True
            break
    report.iterations = sweep
    report.termination = "converged" if report.converged else "max iterations"
    report.info["mu"] = mu.copy()
    report.kkt_residual = group_kkt_residual(B, dataset, opts.lam)
    if not report.converged:
        warnings.warn(f"group lasso did not converge in {sweep} sweeps",
                      NonConvergenceWarning, stacklevel=2)
    return B, report


def group_kkt_residual(B, dataset, lam):
    """Per-row distance from 0 to the subdifferential of the objective."""
    B = check_coef(B, dataset)
    grad = np.column_stack([
        -2 * t.design.T @ (t.response - t.design @ B[:, i])
        for i, t in enumerate(dataset.tasks)])
    norms = np.linalg.norm(B, axis=1)
    out = np.empty(B.shape[0])
    for l in range(B.shape[0]):
        if norms[l] > 0:
            out[l] = np.linalg.norm(grad[l] + lam * B[l] / norms[l])
        else:
            out[l] = max(0.0, np.linalg.norm(grad[l]) - lam)
    return out
