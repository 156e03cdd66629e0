"""The block pseudoinverse formulas against SVD oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddlekit import (
    BLOCK_DIAG,
    BLOCK_TRI,
    CONSTRAINT,
    PChoice,
    apply_pseudo_inverse,
    apply_pseudo_inverse_transpose,
    assemble,
    build,
    build_random_singular,
)
from saddlekit.analysis import pd_bound
from saddlekit.linalg import pinv


def saddle(seed, **kw):
    return build_random_singular(n=kw.pop("n", 8), m=kw.pop("m", 4),
                                 rank_b=kw.pop("rank_b", 3), seed=seed)


def valid_choice(system, kind, seed):
    g = np.random.default_rng(seed)
    if kind == "symmetric_scaled":
        return PChoice(kind=kind, omega=float(g.uniform(0.5, 2.0)))
    return PChoice(kind=kind, omega=float(g.uniform(0.2, 0.8) * pd_bound(system.W)))


class TestPChoice:
    def test_validation(self):
        with pytest.raises(ValueError):
            PChoice(kind="nope")
        with pytest.raises(ValueError):
            PChoice(kind="symmetric_scaled", omega=0.0)
        with pytest.raises(ValueError):
            PChoice(kind="custom")
        PChoice(kind="custom", custom_p=np.eye(2))  # ok


class TestBuild:
    def test_unknown_family(self):
        s = saddle(0)
        with pytest.raises(ValueError):
            build(s, "diagonal", PChoice())

    def test_pd_gate_triangular(self):
        s = saddle(1)
        bad = 1.5 * pd_bound(s.W)
        with pytest.raises(ValueError):
            build(s, CONSTRAINT, PChoice(kind="triangular_split", omega=bad))
        # the gate can be waived explicitly
        build(s, CONSTRAINT, PChoice(kind="triangular_split", omega=bad),
              enforce_pd=False)

    def test_triangular_p_product(self):
        s = saddle(2)
        pc = build(s, CONSTRAINT, valid_choice(s, "triangular_split", 2))
        v = np.random.default_rng(3).standard_normal(s.n)
        assert np.allclose(pc.P @ pc.p_solve(v), v, atol=1e-9)
        assert np.allclose(pc.P.T @ pc.p_solve_t(v), v, atol=1e-9)

    def test_custom_p(self):
        s = saddle(3)
        P = np.diag(np.arange(1.0, s.n + 1))
        pc = build(s, CONSTRAINT, PChoice(kind="custom", custom_p=P))
        v = np.ones(s.n)
        assert np.allclose(pc.p_solve(v), v / np.diag(P))


@pytest.mark.parametrize("family", [CONSTRAINT, BLOCK_DIAG])
@pytest.mark.parametrize("kind", ["symmetric_scaled", "triangular_split"])
@given(seed=st.integers(0, 300))
@settings(max_examples=25, deadline=None)
def test_block_apply_matches_svd_pinv(family, kind, seed):
    s = saddle(seed)
    pc = build(s, family, valid_choice(s, kind, seed))
    M = assemble(pc)
    M_dag = pinv(M, rank_tol=1e-11)
    R = np.random.default_rng(seed + 1).standard_normal((s.n + s.m, 3))
    assert np.allclose(apply_pseudo_inverse(pc, R), M_dag @ R,
                       atol=1e-7 * max(1.0, np.abs(M_dag).max()))
    assert np.allclose(apply_pseudo_inverse_transpose(pc, R), M_dag.T @ R,
                       atol=1e-7 * max(1.0, np.abs(M_dag).max()))


@given(seed=st.integers(0, 300))
@settings(max_examples=25, deadline=None)
def test_block_tri_is_exact_inverse(seed):
    s = saddle(seed)
    pc = build(s, BLOCK_TRI, valid_choice(s, "symmetric_scaled", seed),
               h_sq_over_nu=0.7)
    M = assemble(pc)
    r = np.random.default_rng(seed).standard_normal(s.n + s.m)
    y = apply_pseudo_inverse(pc, r)
    assert np.allclose(M @ y, r, atol=1e-8 * max(1.0, np.abs(M).max()))
    yt = apply_pseudo_inverse_transpose(pc, r)
    assert np.allclose(M.T @ yt, r, atol=1e-8 * max(1.0, np.abs(M).max()))


def test_block_tri_scalar_from_metadata():
    from saddlekit import build_oseen
    s = build_oseen(4, 0.5)
    pc = build(s, BLOCK_TRI, PChoice())
    assert pc.h_sq_over_nu == pytest.approx(s.h**2 / s.nu)


def test_constraint_singularity_matches_b():
    s = saddle(11)
    pc = build(s, CONSTRAINT, PChoice())
    M = assemble(pc)
    from saddlekit.linalg import numerical_rank
    # with P nonsingular, rank(M) = n + rank(B); deficiency matches B's
    assert numerical_rank(M) == s.n + numerical_rank(s.B)


def test_apply_rejects_wrong_length():
    s = saddle(12)
    pc = build(s, CONSTRAINT, PChoice())
    with pytest.raises(ValueError):
        apply_pseudo_inverse(pc, np.zeros(s.n))
