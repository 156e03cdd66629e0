"""Dense linear algebra kernels used across the package.

Everything here operates on plain ``numpy.ndarray`` carriers (real, dense,
row-major).  Factorizations are delegated to LAPACK through numpy/scipy;
the wrappers pin down the rank-truncation and tolerance conventions the
rest of the package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

Array = np.ndarray

#: Relative threshold below which singular values are treated as zero.
DEFAULT_RANK_TOL = 1e-12

#: Width of the exclusion band around eigenvalue 1 in the pseudospectral radius.
DEFAULT_ONE_TOL = 1e-8


class LinAlgFailure(RuntimeError):
    """A dense factorization failed to converge or a precondition was violated."""


class NotPositiveDefinite(LinAlgFailure):
    pass


class SingularTriangular(LinAlgFailure):
    pass


def _as_matrix(A) -> Array:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD ``A = U @ diag(s) @ V.T`` with U, V orthogonal."""

    U: Array
    singular_values: Array
    V: Array

    def reconstruct(self) -> Array:
        rows, cols = self.U.shape[0], self.V.shape[0]
        S = np.zeros((rows, cols))
        k = self.singular_values.size
        S[:k, :k] = np.diag(self.singular_values)
        return self.U @ S @ self.V.T


def svd(A: Array) -> SvdFactors:
    """Full singular value decomposition, singular values nonincreasing."""
    A = _as_matrix(A)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"SVD did not converge for {A.shape[0]}x{A.shape[1]} matrix") from exc
    return SvdFactors(U=U, singular_values=s, V=Vt.T)


def pinv(A: Array, rank_tol: float = DEFAULT_RANK_TOL, max_rank: int | None = None) -> Array:
    """Moore-Penrose inverse via SVD with relative rank truncation.

    Singular values at or below ``rank_tol * s_max`` are treated as zero.
    ``max_rank`` optionally caps the number of retained singular values
    (used when the rank is known a priori from the constraint block).
    """
    if not 0.0 < rank_tol < 1.0:
        raise ValueError("rank_tol must lie in (0, 1)")
    f = svd(A)
    s = f.singular_values
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((A.shape[1], A.shape[0]))
    keep = s > rank_tol * s[0]
    if max_rank is not None:
        keep &= np.arange(s.size) < max_rank
    inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return (f.V[:, : s.size] * inv_s) @ f.U[:, : s.size].T


def cholesky(A: Array) -> Array:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Failure of the factorization doubles as the runtime SPD test.
    """
    A = _as_matrix(A)
    scale = np.abs(A).max()
    if scale > 0 and np.abs(A - A.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix not positive definite") from exc


def tri_solve(T: Array, b: Array, side: str = "lower") -> Array:
    """Solve ``T x = b`` with T triangular (``side`` in {'lower', 'upper'})."""
    T = _as_matrix(T)
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    if np.any(np.diag(T) == 0.0):
        raise SingularTriangular("triangular matrix has a zero diagonal entry")
    return sla.solve_triangular(T, b, lower=(side == "lower"))


def eigenvalues(A: Array) -> Array:
    """Full spectrum of a square matrix (real Schur based, conjugate pairs exact)."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"eigenvalue iteration failed for {A.shape[0]}x{A.shape[1]} matrix") from exc


def pseudospectral_radius(A: Array, one_tol: float = DEFAULT_ONE_TOL) -> float:
    """max |lambda| over eigenvalues of A with |lambda - 1| > one_tol.

    Singular fixed-point iterations legitimately carry eigenvalue 1 from the
    null space of the system matrix; this is the convergence-governing radius
    that ignores it.  Returns 0 when every eigenvalue sits in the band.
    """
    lam = eigenvalues(A)
    outside = lam[np.abs(lam - 1.0) > one_tol]
    if outside.size == 0:
        return 0.0
    return float(np.abs(outside).max())


def spectral_norm(A: Array) -> float:
    """Largest singular value."""
    return float(svd(A).singular_values[0]) if min(A.shape) else 0.0


def numerical_rank(A: Array, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``rank_tol * s_max``."""
    s = svd(A).singular_values
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


def _sym_eig(A: Array) -> tuple[Array, Array]:
    A = _as_matrix(A)
    scale = np.abs(A).max()
    if scale > 0 and np.abs(A - A.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigh(A)


def sym_sqrt(A: Array) -> Array:
    """Symmetric square root of an SPD matrix."""
    w, V = _sym_eig(A)
    if w.min() <= 0.0:
        raise NotPositiveDefinite("matrix not positive definite")
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def sym_inv_sqrt(A: Array) -> Array:
    """Symmetric R with ``R @ A @ R = I`` for SPD A."""
    w, V = _sym_eig(A)
    if w.min() <= 0.0:
        raise NotPositiveDefinite("matrix not positive definite")
    R = (V / np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)
