"""Singular saddle-point benchmark problems.

The main generator discretizes the Oseen equations on the unit square with
a marker-and-cell (MAC) staggered grid: x-velocities live on interior
vertical edges, y-velocities on interior horizontal edges, pressures at
cell centers.  The test setup is the leaky-lid driven cavity: no-slip on
the three fixed walls, tangential velocity (1, 0) on the lid y = 1, and a
recirculating wind field that vanishes on the whole boundary.

With an l x l grid this yields n = 2*l*(l-1) velocity unknowns and
m = l**2 pressures; the divergence block B has the constant-pressure
vector in its null space, so rank(B) = l**2 - 1 and the full saddle-point
matrix is singular.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import mmio
from .linalg import Array, svd

DEFAULT_RANGE_TOL = 1e-10


def wind_x(x, y):
    return 8.0 * x * (x - 1.0) * (1.0 - 2.0 * y)


def wind_y(x, y):
    return 8.0 * y * (2.0 * x - 1.0) * (y - 1.0)


@dataclass(frozen=True)
class Splitting:
    """Symmetric/skew decomposition of the velocity block W."""

    H: Array
    S: Array
    L_s: Array
    U_s: Array


def split(W: Array) -> Splitting:
    """W = H + S with H symmetric, S skew; L_s/U_s the strict triangles of S."""
    W = np.asarray(W, dtype=float)
    H = 0.5 * (W + W.T)
    S = 0.5 * (W - W.T)
    L_s = np.tril(S, -1)
    U_s = np.triu(S, 1)
    return Splitting(H=H, S=S, L_s=L_s, U_s=U_s)


@dataclass(frozen=True)
class SaddleSystem:
    """The block system [[W, B^T], [-B, 0]] (u; p) = (f; g)."""

    W: Array
    B: Array
    f: Array
    g: Array
    l: int | None = None
    nu: float | None = None
    raw_rhs: Array | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def h(self) -> float | None:
        return None if self.l is None else 1.0 / self.l

    def matrix(self) -> Array:
        """Assemble the dense (n+m) x (n+m) coefficient matrix."""
        n, m = self.n, self.m
        A = np.zeros((n + m, n + m))
        A[:n, :n] = self.W
        A[:n, n:] = self.B.T
        A[n:, :n] = -self.B
        return A

    def rhs(self) -> Array:
        return np.concatenate([self.f, self.g])

    def with_rhs(self, b: Array) -> "SaddleSystem":
        return SaddleSystem(W=self.W, B=self.B, f=b[: self.n], g=b[self.n :],
                            l=self.l, nu=self.nu, raw_rhs=self.raw_rhs)


def _assemble_oseen(l: int, nu: float):
    h = 1.0 / l
    n_u = l * (l - 1)

    def id_u(i, j):  # i in 1..l-1, j in 0..l-1
        return j * (l - 1) + (i - 1)

    def id_v(i, j):  # i in 0..l-1, j in 1..l-1
        return (j - 1) * l + i

    F1 = np.zeros((n_u, n_u))
    F2 = np.zeros((n_u, n_u))
    f1 = np.zeros(n_u)
    f2 = np.zeros(n_u)
    visc = nu / h**2

    # x-momentum at (i*h, (j+0.5)*h)
    for j in range(l):
        for i in range(1, l):
            k = id_u(i, j)
            x, y = i * h, (j + 0.5) * h
            F1[k, k] += 4.0 * visc
            if i - 1 >= 1:
                F1[k, id_u(i - 1, j)] -= visc
            if i + 1 <= l - 1:
                F1[k, id_u(i + 1, j)] -= visc
            if j - 1 >= 0:
                F1[k, id_u(i, j - 1)] -= visc
            else:  # ghost reflection across y=0, u=0 there
                F1[k, k] += visc
            if j + 1 <= l - 1:
                F1[k, id_u(i, j + 1)] -= visc
            else:  # moving lid: u=1 on y=1
                F1[k, k] += visc
                f1[k] += 2.0 * visc
            # convection a u_x + b u_y, averaged-coefficient centered form
            a0 = wind_x(x, y)
            cE = (a0 + wind_x(x + h, y)) / (4.0 * h)
            cW = (a0 + wind_x(x - h, y)) / (4.0 * h)
            b0 = wind_y(x, y)
            cN = (b0 + wind_y(x, y + h)) / (4.0 * h)
            cS = (b0 + wind_y(x, y - h)) / (4.0 * h)
            if i + 1 <= l - 1:
                F1[k, id_u(i + 1, j)] += cE
            if i - 1 >= 1:
                F1[k, id_u(i - 1, j)] -= cW
            if j + 1 <= l - 1:
                F1[k, id_u(i, j + 1)] += cN
            else:  # ghost value 2*1 - u
                F1[k, k] -= cN
                f1[k] -= 2.0 * cN
            if j - 1 >= 0:
                F1[k, id_u(i, j - 1)] -= cS
            else:  # ghost value -u
                F1[k, k] += cS

    # y-momentum at ((i+0.5)*h, j*h)
    for j in range(1, l):
        for i in range(l):
            k = id_v(i, j)
            x, y = (i + 0.5) * h, j * h
            F2[k, k] += 4.0 * visc
            if i - 1 >= 0:
                F2[k, id_v(i - 1, j)] -= visc
            else:  # ghost reflection across x=0, v=0
                F2[k, k] += visc
            if i + 1 <= l - 1:
                F2[k, id_v(i + 1, j)] -= visc
            else:
                F2[k, k] += visc
            if j - 1 >= 1:
                F2[k, id_v(i, j - 1)] -= visc
            if j + 1 <= l - 1:
                F2[k, id_v(i, j + 1)] -= visc
            a0 = wind_x(x, y)
            cE = (a0 + wind_x(x + h, y)) / (4.0 * h)
            cW = (a0 + wind_x(x - h, y)) / (4.0 * h)
            b0 = wind_y(x, y)
            cN = (b0 + wind_y(x, y + h)) / (4.0 * h)
            cS = (b0 + wind_y(x, y - h)) / (4.0 * h)
            if i + 1 <= l - 1:
                F2[k, id_v(i + 1, j)] += cE
            else:  # ghost value -v
                F2[k, k] -= cE
            if i - 1 >= 0:
                F2[k, id_v(i - 1, j)] -= cW
            else:
                F2[k, k] += cW
            if j + 1 <= l - 1:
                F2[k, id_v(i, j + 1)] += cN
            if j - 1 >= 1:
                F2[k, id_v(i, j - 1)] -= cS

    # discrete divergence scaled so that B^T is the pressure gradient
    B = np.zeros((l * l, 2 * n_u))
    for j in range(l):
        for i in range(l):
            rp = j * l + i
            if i >= 1:
                B[rp, id_u(i, j)] += 1.0 / h
            if i + 1 <= l - 1:
                B[rp, id_u(i + 1, j)] -= 1.0 / h
            if j >= 1:
                B[rp, n_u + id_v(i, j)] += 1.0 / h
            if j + 1 <= l - 1:
                B[rp, n_u + id_v(i, j + 1)] -= 1.0 / h

    W = np.zeros((2 * n_u, 2 * n_u))
    W[:n_u, :n_u] = F1
    W[n_u:, n_u:] = F2
    return W, B, np.concatenate([f1, f2]), np.zeros(l * l)


def build_oseen(l: int, nu: float, rhs_mode: str = "manufactured", seed: int = 0) -> SaddleSystem:
    """Leaky-lid cavity Oseen system on an l x l MAC grid.

    The raw load vector (boundary folding of the lid data, zero body force)
    is kept on the system for the ``projected`` right-hand-side mode; the
    stored (f, g) come from :func:`make_consistent_rhs`.
    """
    if l < 4:
        raise ValueError("grid too coarse: need l >= 4")
    if nu <= 0:
        raise ValueError("viscosity nu must be positive")
    W, B, f_raw, g_raw = _assemble_oseen(l, nu)
    system = SaddleSystem(W=W, B=B, f=f_raw, g=g_raw, l=l, nu=nu,
                          raw_rhs=np.concatenate([f_raw, g_raw]))
    b = make_consistent_rhs(system, mode=rhs_mode, seed=seed)
    return system.with_rhs(b)


def make_consistent_rhs(system: SaddleSystem, mode: str = "manufactured",
                        seed: int = 0, x_star: Array | None = None) -> Array:
    """Right-hand side guaranteed (or projected) to lie in range(A).

    ``manufactured``: b = A x* for a seeded pseudo-random x*.
    ``projected``: orthogonal projection of the raw assembled load onto
    range(A), removing the left-null-space component found by SVD.
    """
    A = system.matrix()
    if mode == "manufactured":
        if x_star is None:
            rng = np.random.default_rng(seed)
            x_star = rng.standard_normal(system.n + system.m)
        return A @ np.asarray(x_star, dtype=float)
    if mode == "projected":
        if system.raw_rhs is None:
            raise ValueError("system carries no raw load vector to project")
        fac = svd(A)
        s = fac.singular_values
        null_left = fac.U[:, s <= DEFAULT_RANGE_TOL * s[0]]
        b = system.raw_rhs
        return b - null_left @ (null_left.T @ b)
    raise ValueError(f"unknown rhs mode {mode!r}")


def build_random_singular(n: int, m: int, rank_b: int, seed: int,
                          skew_scale: float = 0.3) -> SaddleSystem:
    """Small synthetic singular saddle system for property tests.

    W is a diagonally dominant SPD part plus a scaled skew part; B is an
    explicit rank-``rank_b`` product, so the system is singular whenever
    rank_b < m.  The right-hand side is manufactured, hence consistent.
    """
    if not (rank_b < m <= n):
        raise ValueError("need rank_b < m <= n")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Hs = 0.5 * (G + G.T)
    H = Hs + np.diag(np.abs(Hs).sum(axis=1) + 1.0)
    S = skew_scale * 0.5 * (G - G.T)
    W = H + S
    B = rng.standard_normal((m, rank_b)) @ rng.standard_normal((rank_b, n))
    system = SaddleSystem(W=W, B=B, f=np.zeros(n), g=np.zeros(m))
    b = make_consistent_rhs(system, mode="manufactured", seed=seed + 1)
    return system.with_rhs(b)


def export(system: SaddleSystem, out_dir) -> dict:
    """Write W, B, f, g in coordinate format plus a JSON metadata sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mmio.write_coordinate(out / "W.mtx", system.W)
    mmio.write_coordinate(out / "B.mtx", system.B)
    mmio.write_vector(out / "f.mtx", system.f)
    mmio.write_vector(out / "g.mtx", system.g)
    meta = {"l": system.l, "nu": system.nu, "n": system.n, "m": system.m}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta
