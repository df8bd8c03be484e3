"""Problem data for the multi-task regression model ``y_ij = x_ij' beta_i + e_ij``.

Coefficient matrices are plain ``(p, n)`` arrays whose column ``i`` is the
coefficient vector of task ``i``; rows are the per-variable groups used by
the group penalty.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch


@dataclass(frozen=True)
class Task:
    design: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        X = np.array(self.design, dtype=float)
        y = np.array(self.response, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise DimensionMismatch(f"design must be 2-d, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise DimensionMismatch(
                f"design has {X.shape[0]} rows but response has {y.size}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionMismatch("a task needs at least one row and column")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("task data must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)

    @property
    def m(self):
        return self.design.shape[0]


@dataclass(frozen=True)
class MultiTaskDataset:
    """``n`` regression tasks sharing the same ``p`` covariates."""

    tasks: tuple

    def __post_init__(self):
        tasks = tuple(t if isinstance(t, Task) else Task(*t) for t in self.tasks)
        if not tasks:
            raise DimensionMismatch("dataset needs at least one task")
        p = tasks[0].design.shape[1]
        for i, t in enumerate(tasks):
            if t.design.shape[1] != p:
                raise DimensionMismatch(
                    f"task {i} has {t.design.shape[1]} columns, expected {p}")
        object.__setattr__(self, "tasks", tasks)

    @classmethod
    def from_arrays(cls, X, Y):
        """Build from a stacked ``(n, m, p)`` design and ``(n, m)`` responses,
        or from equal-length sequences of per-task arrays."""
        return cls(tuple(Task(Xi, yi) for Xi, yi in zip(X, Y, strict=True)))

    @property
    def n(self):
        return len(self.tasks)

    @property
    def p(self):
        return self.tasks[0].design.shape[1]

    @property
    def rows(self):
        return [t.m for t in self.tasks]

    def designs(self):
        return [t.design for t in self.tasks]

    def responses(self):
        return [t.response for t in self.tasks]

    def is_column_normalized(self, tol=1e-8):
        """True when every column of every task satisfies ``sum_j x^2 = m``."""
        return all(
            np.allclose((t.design**2).sum(axis=0), t.m, rtol=0, atol=tol * t.m)
            for t in self.tasks)

    def rotated(self, U):
        """Dataset with every covariate row mapped ``x -> U' x``."""
        U = np.asarray(U, dtype=float)
        return MultiTaskDataset(tuple(Task(t.design @ U, t.response) for t in self.tasks))


@dataclass(frozen=True)
class PopTruth:
    """Generative ground truth used by simulations and bound checks.

    ``pop_cov[i]`` is the ``(p+1, p+1)`` second-moment matrix of
    ``z = (y, x')'`` for task ``i``; ``moment_bound`` is an upper bound on
    ``E max_{i,l,k} (z_il z_ik)^2``.
    """

    coef: np.ndarray
    sigma: float
    pop_cov: tuple = field(repr=False)
    moment_bound: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.moment_bound > 0:
            raise ValueError("moment_bound must be positive")


def check_coef(B, dataset):
    B = np.asarray(B, dtype=float)
    if B.shape != (dataset.p, dataset.n):
        raise DimensionMismatch(
            f"coefficients have shape {B.shape}, expected {(dataset.p, dataset.n)}")
    return B


def augment(beta):
    """``(-1, beta')'``; accepts a vector or a ``(p, n)`` matrix (per column)."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 1:
        return np.concatenate(([-1.0], beta))
    return np.vstack([-np.ones((1, beta.shape[1])), beta])


def lpq_norm(B, p_exp, q_exp, axis="rows"):
    """``[sum_groups (sum_members |z|^p)^(q/p)]^(1/q)``.

    ``axis="rows"`` groups the entries of each row (a variable across tasks),
    ``axis="columns"`` groups each column (one task).  ``(2, 1)`` on rows is
    the group-lasso penalty.
    """
    if p_exp < 1 or q_exp < 1:
        raise ValueError("exponents must be >= 1")
    B = np.abs(np.asarray(B, dtype=float))
    if axis == "rows":
        groups = B
    elif axis == "columns":
        groups = B.T
    else:
        raise ValueError(f"axis must be 'rows' or 'columns', not {axis!r}")
    inner = np.sum(groups**p_exp, axis=1) ** (1.0 / p_exp)
    return float(np.sum(inner**q_exp) ** (1.0 / q_exp))


def empirical_cov(task, center=False):
    """Raw second-moment matrix ``m^-1 sum_j z_j z_j'`` of ``z = (y, x')'``.

    The model assumes mean-zero variables, so nothing is subtracted unless
    ``center=True``.
    """
    Z = np.column_stack([task.response, task.design])
    if center:
        Z = Z - Z.mean(axis=0)
    return Z.T @ Z / task.m


def empirical_risk(B, dataset):
    """Residual sum of squares ``sum_i ||y_i - X_i beta_i||^2``."""
    B = check_coef(B, dataset)
    return float(sum(np.sum((t.response - t.design @ B[:, i]) ** 2)
                     for i, t in enumerate(dataset.tasks)))


def population_risk(B, truth):
    """``sum_i beta~_i' Sigma~_i beta~_i``."""
    B = np.asarray(B, dtype=float)
    if B.shape != np.shape(truth.coef):
        raise DimensionMismatch(
            f"coefficients have shape {B.shape}, truth has {np.shape(truth.coef)}")
    Bt = augment(B)
    return float(sum(Bt[:, i] @ S @ Bt[:, i] for i, S in enumerate(truth.pop_cov)))


def sup_norm_gap(dataset, truth, center=False):
    """``max_i max |S~_i - Sigma~_i|`` over all entries."""
    return float(max(np.max(np.abs(empirical_cov(t, center) - S))
                     for t, S in zip(dataset.tasks, truth.pop_cov, strict=True)))


@dataclass(frozen=True)
class SparsitySummary:
    supports: list
    counts: np.ndarray
    row_support: np.ndarray
    rank: int


def sparsity_summary(B, threshold=None):
    """Per-task supports, row support and numerical rank of ``B``.

    Entries with ``|b| <= threshold`` count as zero; the default threshold
    is ``1e-8 * max|B|``.  The rank counts singular values above
    ``threshold * s_max`` (``1e-8 * s_max`` by default).
    """
    B = np.asarray(B, dtype=float)
    rank_tol = 1e-8 if threshold is None else threshold
    if threshold is None:
        threshold = 1e-8 * np.max(np.abs(B), initial=0.0)
    nz = np.abs(B) > threshold
    supports = [np.flatnonzero(nz[:, i]) for i in range(B.shape[1])]
    s = np.linalg.svd(B, compute_uv=False) if B.size else np.zeros(0)
    rank = 0 if not s.size or s[0] == 0 else int(np.count_nonzero(s > rank_tol * s[0]))
    return SparsitySummary(
        supports=supports,
        counts=nz.sum(axis=0),
        row_support=np.flatnonzero(nz.any(axis=1)),
        rank=rank,
    )


@dataclass
class FitReport:
    """What a solver did: objective trace, iteration count and termination."""

    objective: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    termination: str = ""
    kkt_residual: object = None
    active_sizes: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def to_dict(self):
        def plain(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, np.generic):
                return v.item()
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [plain(x) for x in v]
            return v

        return {
            "objective": plain(self.objective),
            "iterations": self.iterations,
            "converged": self.converged,
            "termination": self.termination,
            "kkt_residual": plain(self.kkt_residual),
            "active_sizes": plain(self.active_sizes),
            "info": plain(self.info),
        }
