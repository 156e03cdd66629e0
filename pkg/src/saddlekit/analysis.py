"""Convergence diagnostics for the constraint-preconditioned iteration.

Dense spectral tools: the convergence indicator gamma(X(P-W)), the
three-part convergence criterion for singular fixed-point iterations
(null-space match, index one, pseudospectral radius below one), the
projector spectrum of the symmetric-P case, and the omega bounds for both
P parameterizations.  Everything here costs O(n^3) and is meant for
desk-scale instances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg as sla

from .linalg import (
    Array,
    DEFAULT_ONE_TOL,
    DEFAULT_RANK_TOL,
    NotPositiveDefinite,
    cholesky,
    numerical_rank,
    pseudospectral_radius,
    spectral_norm,
    svd,
    sym_inv_sqrt,
    sym_sqrt,
)
from .precond import (CONSTRAINT, BLOCK_DIAG, SYMMETRIC_SCALED, TRIANGULAR_SPLIT,
                      Preconditioner, apply_pseudo_inverse)
from .problems import SaddleSystem, split

NULL_ANGLE_TOL = 1e-8


@dataclass
class SpectralReport:
    gamma_T: float
    gamma_XPW: float | None
    lemma4_null_ok: bool
    lemma4_index_ok: bool
    lemma4_gamma_ok: bool
    projector_eig_ones: int | None
    projector_eig_zeros: int | None
    omega_used: float

    def to_json(self, **extra) -> str:
        payload = asdict(self)
        payload.update(extra)
        return json.dumps(payload, indent=2, default=float)


def compute_X(system: SaddleSystem, pc: Preconditioner) -> Array:
    """The n x n matrix X = P^{-1} - P^{-1} B^T E^+ B P^{-1}."""
    if pc.family != CONSTRAINT:
        raise ValueError("X is defined for the constraint family only")
    Pinv = pc.p_solve(np.eye(pc.n))
    BPinv = pc.B @ Pinv
    return Pinv - BPinv.T @ (pc.E_pinv @ BPinv)


def gcp_convergence_indicator(system: SaddleSystem, pc: Preconditioner,
                              one_tol: float = DEFAULT_ONE_TOL) -> float:
    """gamma(X(P - W)); the stationary scheme converges iff this is < 1."""
    X = compute_X(system, pc)
    return pseudospectral_radius(X @ (pc.P - system.W), one_tol)


def _null_basis(M: Array, rank_tol: float = DEFAULT_RANK_TOL) -> Array:
    f = svd(M)
    s = f.singular_values
    if s.size == 0 or s[0] == 0.0:
        return f.V
    mask = np.concatenate([s <= rank_tol * s[0],
                           np.ones(f.V.shape[1] - s.size, dtype=bool)])
    return f.V[:, mask]


def check_lemma4(system: SaddleSystem, pc: Preconditioner,
                 one_tol: float = DEFAULT_ONE_TOL) -> SpectralReport:
    """Evaluate the three convergence conditions for T = I - M^+ A."""
    if pc.family not in (CONSTRAINT, BLOCK_DIAG):
        raise ValueError("convergence conditions apply to the singular families")
    A = system.matrix()
    MdagA = apply_pseudo_inverse(pc, A)
    T = np.eye(A.shape[0]) - MdagA

    NA = _null_basis(A)
    NMA = _null_basis(MdagA)
    if NA.shape[1] != NMA.shape[1]:
        null_ok = False
    elif NA.shape[1] == 0:
        null_ok = True
    else:
        angles = sla.subspace_angles(NA, NMA)
        null_ok = bool(angles.max(initial=0.0) <= NULL_ANGLE_TOL)

    index_ok = numerical_rank(MdagA) == numerical_rank(MdagA @ MdagA)
    gamma_T = pseudospectral_radius(T, one_tol)

    gamma_xpw = None
    if pc.family == CONSTRAINT:
        gamma_xpw = gcp_convergence_indicator(system, pc, one_tol)

    ones = zeros = None
    if pc.family == CONSTRAINT and pc.p_choice.kind == SYMMETRIC_SCALED:
        ones, zeros, _ = projection_spectrum(system, pc)

    return SpectralReport(
        gamma_T=gamma_T,
        gamma_XPW=gamma_xpw,
        lemma4_null_ok=null_ok,
        lemma4_index_ok=index_ok,
        lemma4_gamma_ok=bool(gamma_T < 1.0),
        projector_eig_ones=ones,
        projector_eig_zeros=zeros,
        omega_used=pc.p_choice.omega,
    )


def projection_spectrum(system: SaddleSystem, pc: Preconditioner) -> tuple[int, int, float]:
    """Eigenvalues of P^{1/2} X P^{1/2}, clustered onto {0, 1}.

    For symmetric positive definite P this matrix is an orthogonal
    projector with n - rank(B) unit eigenvalues and rank(B) zeros.
    """
    if pc.p_choice.kind != SYMMETRIC_SCALED:
        raise ValueError("projection spectrum requires a symmetric positive definite P")
    X = compute_X(system, pc)
    R = sym_sqrt(pc.P)
    w = np.linalg.eigvalsh(0.5 * ((R @ X @ R) + (R @ X @ R).T))
    dev = np.minimum(np.abs(w), np.abs(w - 1.0))
    ones = int(np.count_nonzero(np.abs(w - 1.0) <= np.abs(w)))
    zeros = w.size - ones
    return ones, zeros, float(dev.max(initial=0.0))


def omega_bound_symmetric(W: Array) -> float:
    """Sufficient omega threshold for P = omega*H: (1 + rho^2) / 2.

    rho is the spectral radius of H^{-1/2} S H^{-1/2}; the scheme converges
    for every omega strictly above the returned value.
    """
    sp = split(W)
    R = sym_inv_sqrt(sp.H)
    rho = spectral_norm(R @ sp.S @ R)  # equals the spectral radius (skew matrix)
    return 0.5 * (1.0 + rho**2)


def omega_bound_triangular(W: Array) -> float:
    """Upper omega threshold for the triangular-split P.

    Returns (-lmax + sqrt(lmax^2 + 16 c^2)) / (4 c^2) with lmax the largest
    eigenvalue of H and c = ||L_s||_2; the analytic limit 2/lmax when the
    skew part vanishes.
    """
    sp = split(W)
    cholesky(sp.H)  # SPD gate
    lmax = float(np.linalg.eigvalsh(sp.H).max())
    c = spectral_norm(sp.L_s)
    if c < 1e-12 * max(spectral_norm(sp.H), 1.0):
        return 2.0 / lmax
    return (-lmax + math.sqrt(lmax**2 + 16.0 * c**2)) / (4.0 * c**2)


def pd_bound(W: Array) -> float:
    """Positive-definiteness threshold 1/||L_s||_2 for the triangular-split P."""
    c = spectral_norm(split(W).L_s)
    return math.inf if c == 0.0 else 1.0 / c


def norm_certificates(system: SaddleSystem, pc: Preconditioner) -> tuple[float, float]:
    """The two norm bounds certifying convergence of the triangular-split P.

    Returns (x_norm, pw_norm) with x_norm = ||P_H^{1/2} X P_H^{1/2}||_2
    (always <= 1) and pw_norm = ||P_H^{-1/2}(P - W)P_H^{-1/2}||_2 (< 1 for
    omega below the triangular bound).
    """
    if pc.family != CONSTRAINT or pc.p_choice.kind != TRIANGULAR_SPLIT:
        raise ValueError("norm certificates apply to the triangular-split constraint P")
    if pc.p_choice.omega >= omega_bound_triangular(system.W):
        raise ValueError("omega is outside the certified triangular-split range")
    P_H = 0.5 * (pc.P + pc.P.T)
    try:
        Rh = sym_sqrt(P_H)
        Rinv = sym_inv_sqrt(P_H)
    except NotPositiveDefinite as exc:
        raise ValueError("symmetric part of P is not positive definite") from exc
    X = compute_X(system, pc)
    x_norm = spectral_norm(Rh @ X @ Rh)
    pw_norm = spectral_norm(Rinv @ (pc.P - system.W) @ Rinv)
    return x_norm, pw_norm
