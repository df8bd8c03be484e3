r"""Dense symmetric and singular-value linear algebra for the trace-norm penalty.

All functions are pure and operate on small dense ``numpy`` arrays.  The
symmetric routines accept positive semi-definite input with a little
round-off: asymmetry below ``1e-8`` (relative) is averaged away and negative
eigenvalue dust is clamped to zero.

.. math::
    A^\gamma = \sum_i c_i^\gamma x_i x_i^T,
    \qquad |||B|||_1 = \mathrm{tr}\,(B B^T)^{1/2} = \sum_\xi \alpha_\xi
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConvergenceFailure,
    DegenerateEigenvalueError,
    IndefiniteInputError,
    NonSymmetricError,
)

SYMMETRY_TOL = 1e-8
NEGATIVE_DUST = 1e-8


@dataclass(frozen=True)
class SymSpectrum:
    """Eigen-decomposition of a symmetric matrix, eigenvalues nonincreasing."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


@dataclass(frozen=True)
class Svd:
    """Thin SVD ``B = left @ diag(singulars) @ right.T`` keeping only the
    numerically nonzero singular values (``r`` may be 0)."""

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    @property
    def rank(self):
        return self.singulars.size

    def reconstruct(self):
        return (self.left * self.singulars) @ self.right.T


def _as_symmetric(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSymmetricError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NonSymmetricError("matrix is not symmetric within 1e-8 (relative)")
    return 0.5 * (A + A.T)


def sym_eig(A, psd=False):
    """Symmetric eigendecomposition with eigenvalues sorted nonincreasing.

    With ``psd=True`` eigenvalues in ``[-1e-8 * max(1, |c|_max), 0)`` are
    clamped to zero and anything more negative raises
    :class:`IndefiniteInputError`.
    """
    A = _as_symmetric(A)
    try:
        c, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    c, V = c[::-1], V[:, ::-1]
    if psd:
        floor = -NEGATIVE_DUST * max(1.0, np.max(np.abs(c), initial=0.0))
        if c.size and c[-1] < floor:
            raise IndefiniteInputError(f"eigenvalue {c[-1]:.3g} is negative")
        c = np.clip(c, 0.0, None)
    return SymSpectrum(eigenvalues=c, eigenvectors=V)


def rank_tolerance(eigenvalues, dim):
    top = np.max(eigenvalues, initial=0.0)
    return dim * np.finfo(float).eps * top


def psd_power(A, gamma):
    """Matrix power of a PSD matrix through its eigendecomposition.

    Eigenvalues at or below the rank tolerance ``p * eps * c_max`` count as
    zero, so negative powers are pseudo-powers and ``gamma == 0`` gives the
    projector onto the range.
    """
    spec = sym_eig(A, psd=True)
    c, V = spec.eigenvalues, spec.eigenvectors
    # eigenvalues inside the round-off band are treated as exact zeros; for
    # fractional powers this stops sqrt(1e-16) ~ 1e-8 noise from leaking in
    keep = c > rank_tolerance(c, c.size)
    w = np.zeros_like(c)
    w[keep] = c[keep] ** gamma
    return (V * w) @ V.T


def pinv_sqrt(A):
    """Moore-Penrose inverse of ``A ** (1/2)`` for PSD ``A``."""
    return psd_power(A, -0.5)


def svd(B):
    """Thin SVD keeping singular values above ``max(p, n) * eps * s_max``."""
    B = np.asarray(B, dtype=float)
    if not np.all(np.isfinite(B)):
        raise ValueError("matrix has non-finite entries")
    if B.size == 0:
        p, n = B.shape
        return Svd(np.zeros((p, 0)), np.zeros(0), np.zeros((n, 0)))
    try:
        U, s, Vt = np.linalg.svd(B, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    tol = max(B.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.count_nonzero(s > tol))
    return Svd(left=U[:, :r], singulars=s[:r], right=Vt[:r].T)


def nuclear_norm(B):
    """Sum of singular values (trace / Schatten-1 norm)."""
    B = np.asarray(B, dtype=float)
    if not np.all(np.isfinite(B)):
        raise ValueError("matrix has non-finite entries")
    if B.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(B, compute_uv=False)))


def numerical_rank(B, rel_tol=1e-6):
    """Count singular values above ``rel_tol`` times the largest one."""
    B = np.asarray(B, dtype=float)
    if B.size == 0:
        return 0
    s = np.linalg.svd(B, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def eigvalue_directional_derivative(A, Adot, k):
    """Derivative of the ``k``-th largest eigenvalue of ``A`` along ``Adot``.

    ``k`` counts from 1 (``k=1`` is the top eigenvalue).  The eigenvalue must
    be simple: its gap to both neighbours has to exceed ``1e-6 * ||A||_2``.
    """
    spec = sym_eig(A)
    Adot = _as_symmetric(Adot)
    c = spec.eigenvalues
    if not 1 <= k <= c.size:
        raise IndexError(f"k={k} outside 1..{c.size}")
    i = k - 1
    gap = 1e-6 * np.max(np.abs(c))
    neighbours = [c[j] for j in (i - 1, i + 1) if 0 <= j < c.size]
    if any(abs(c[i] - cj) <= gap for cj in neighbours):
        raise DegenerateEigenvalueError(f"eigenvalue {k} is not simple")
    x = spec.eigenvectors[:, i]
    return float(x @ Adot @ x)
