import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddlekit import (
    BLOCK_DIAG,
    BLOCK_TRI,
    CONSTRAINT,
    PChoice,
    SaddleSystem,
    build,
    build_oseen,
    build_random_singular,
    check_lemma4,
    compute_X,
    gcp_convergence_indicator,
    gcp_iterate,
    norm_certificates,
    omega_bound_symmetric,
    omega_bound_triangular,
    pd_bound,
    projection_spectrum,
)
from saddlekit.linalg import NotPositiveDefinite, cholesky, numerical_rank, sym_inv_sqrt
from saddlekit.solvers import SolveConfig, solve_with


def saddle(seed, **kw):
    return build_random_singular(n=kw.pop("n", 8), m=kw.pop("m", 4),
                                 rank_b=kw.pop("rank_b", 3), seed=seed)


def constraint_pc(system, kind="symmetric_scaled", omega=1.0, **kw):
    return build(system, CONSTRAINT, PChoice(kind=kind, omega=omega), **kw)


class TestComputeX:
    def test_square_nonsingular_b_gives_zero(self, rng):
        n = 5
        B = rng.standard_normal((n, n)) + 4 * np.eye(n)
        W = np.eye(n)
        s = SaddleSystem(W=W, B=B, f=np.zeros(n), g=np.zeros(n))
        pc = build(s, CONSTRAINT, PChoice(kind="custom", custom_p=np.eye(n)))
        assert np.allclose(compute_X(s, pc), 0.0, atol=1e-9)

    def test_zero_b_gives_p_inverse(self, rng):
        n = 4
        W = np.eye(n)
        s = SaddleSystem(W=W, B=np.zeros((2, n)), f=np.zeros(n), g=np.zeros(2))
        P = np.diag([1.0, 2.0, 4.0, 8.0])
        pc = build(s, CONSTRAINT, PChoice(kind="custom", custom_p=P))
        assert np.allclose(compute_X(s, pc), np.linalg.inv(P), atol=1e-12)

    @given(seed=st.integers(0, 200))
    @settings(max_examples=20, deadline=None)
    def test_matches_term_by_term_oracle(self, seed):
        s = saddle(seed)
        pc = constraint_pc(s)
        from saddlekit.linalg import pinv
        Pinv = np.linalg.inv(pc.P)
        E = s.B @ Pinv @ s.B.T
        X_oracle = Pinv - Pinv @ s.B.T @ pinv(E) @ s.B @ Pinv
        assert np.allclose(compute_X(s, pc), X_oracle, atol=1e-8)

    def test_family_gate(self):
        s = saddle(0)
        pc = build(s, BLOCK_DIAG, PChoice())
        with pytest.raises(ValueError):
            compute_X(s, pc)


class TestIndicator:
    def test_symmetric_w_equal_p(self, rng):
        # P = W symmetric makes X(P - W) vanish identically
        G = rng.standard_normal((6, 6))
        W = G @ G.T + 6 * np.eye(6)
        B = rng.standard_normal((3, 6))
        s = SaddleSystem(W=W, B=B, f=np.zeros(6), g=np.zeros(3))
        pc = build(s, CONSTRAINT, PChoice(kind="custom", custom_p=W))
        assert gcp_convergence_indicator(s, pc) == pytest.approx(0.0, abs=1e-9)

    def test_closed_form_without_constraints(self, rng):
        # B = 0: eigenvalues of X(P-W) with P = omega*W are 1 - 1/omega
        G = rng.standard_normal((5, 5))
        W = G @ G.T + 5 * np.eye(5)
        s = SaddleSystem(W=W, B=np.zeros((1, 5)), f=np.zeros(5), g=np.zeros(1))
        for omega in (0.01, 0.4, 2.0):
            pc = constraint_pc(s, omega=omega)
            expect = abs(1.0 - 1.0 / omega)
            assert gcp_convergence_indicator(s, pc) == pytest.approx(expect, rel=1e-8)

    def test_oseen_case1_consistent_with_solve(self):
        s = build_oseen(8, 0.1)
        pc = constraint_pc(s)
        gamma = gcp_convergence_indicator(s, pc)
        assert gamma < 1.0
        assert solve_with("gcp", s, pc).converged


class TestLemma4:
    @given(seed=st.integers(0, 200))
    @settings(max_examples=15, deadline=None)
    def test_constraint_conditions_always_hold(self, seed):
        s = saddle(seed)
        report = check_lemma4(s, constraint_pc(s))
        assert report.lemma4_null_ok and report.lemma4_index_ok
        assert report.gamma_XPW is not None
        assert (report.gamma_T < 1.0) == report.lemma4_gamma_ok

    def test_m_equals_a_projector(self, rng):
        # using W itself as P on a symmetric system: T is a projector
        G = rng.standard_normal((6, 6))
        W = G @ G.T + 6 * np.eye(6)
        B = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 6))
        s = SaddleSystem(W=W, B=B, f=np.zeros(6), g=np.zeros(4))
        pc = build(s, CONSTRAINT, PChoice(kind="custom", custom_p=W))
        report = check_lemma4(s, pc)
        assert report.gamma_T == pytest.approx(0.0, abs=1e-8)

    def test_family_gate(self):
        s = saddle(1)
        pc = build(s, BLOCK_TRI, PChoice(), h_sq_over_nu=1.0)
        with pytest.raises(ValueError):
            check_lemma4(s, pc)

    def test_json_serialization(self):
        s = saddle(2)
        report = check_lemma4(s, constraint_pc(s))
        payload = json.loads(report.to_json(case="I"))
        assert payload["case"] == "I"
        assert set(payload) >= {"gamma_T", "lemma4_null_ok", "omega_used"}


class TestProjectionSpectrum:
    @pytest.mark.parametrize("l", [4, 8])
    def test_oseen_counts(self, l):
        s = build_oseen(l, 0.1)
        ones, zeros, dev = projection_spectrum(s, constraint_pc(s))
        rank_b = l * l - 1
        assert ones == s.n - rank_b
        assert zeros == rank_b
        assert dev <= 1e-8

    def test_zero_b_all_ones(self, rng):
        G = rng.standard_normal((5, 5))
        W = G @ G.T + 5 * np.eye(5)
        s = SaddleSystem(W=W, B=np.zeros((1, 5)), f=np.zeros(5), g=np.zeros(1))
        ones, zeros, dev = projection_spectrum(s, constraint_pc(s))
        assert (ones, zeros) == (5, 0) and dev <= 1e-10

    def test_requires_symmetric_kind(self):
        s = saddle(3)
        pc = constraint_pc(s, kind="triangular_split", omega=0.01)
        with pytest.raises(ValueError):
            projection_spectrum(s, pc)

    def test_projector_idempotent(self):
        s = build_oseen(4, 0.1)
        pc = constraint_pc(s)
        Ri = sym_inv_sqrt(pc.P)
        Q = Ri @ s.B.T @ pc.E_pinv @ s.B @ Ri
        assert np.abs(Q @ Q - Q).max() <= 1e-9


class TestOmegaBounds:
    def test_symmetric_no_skew(self, rng):
        G = rng.standard_normal((4, 4))
        W = G @ G.T + 4 * np.eye(4)
        assert omega_bound_symmetric(W) == pytest.approx(0.5)

    def test_symmetric_known_rho(self):
        W = np.eye(2) + np.array([[0.0, 2.0], [-2.0, 0.0]])
        assert omega_bound_symmetric(W) == pytest.approx(2.5)

    def test_triangular_closed_form(self):
        # lambda_max(H) = 1, ||L_s||_2 = 1
        W = np.eye(2) + np.array([[0.0, 1.0], [-1.0, 0.0]])
        expect = (-1.0 + math.sqrt(17.0)) / 4.0
        assert omega_bound_triangular(W) == pytest.approx(expect)

    def test_triangular_limit_no_skew(self):
        W = np.diag([2.0, 0.5])
        assert omega_bound_triangular(W) == pytest.approx(1.0)

    @given(seed=st.integers(0, 200))
    @settings(max_examples=20, deadline=None)
    def test_triangular_below_pd_bound(self, seed):
        W = saddle(seed).W
        assert omega_bound_triangular(W) <= pd_bound(W) + 1e-12

    def test_pd_bound_values(self):
        W = np.eye(2) + np.array([[0.0, 2.0], [-2.0, 0.0]])
        assert pd_bound(W) == pytest.approx(0.5)
        assert pd_bound(np.eye(3)) == math.inf

    def test_pd_bound_two_by_two_witness(self):
        c = 2.0
        S = np.array([[0.0, -c], [c, 0.0]])
        W = np.eye(2) + S
        bound = pd_bound(W)
        for omega, ok in ((0.95 * bound, True), (1.05 * bound, False)):
            Fl = np.eye(2) + omega * np.tril(S, -1)
            Fu = np.eye(2) + omega * np.triu(S, 1)
            P = (Fl @ Fu) / omega
            P_H = 0.5 * (P + P.T)
            if ok:
                cholesky(P_H)
            else:
                with pytest.raises(NotPositiveDefinite):
                    cholesky(P_H)

    def test_bounds_certify_convergence_oseen(self):
        s = build_oseen(8, 0.1)
        omega = 1.1 * omega_bound_symmetric(s.W)
        pc = constraint_pc(s, omega=omega)
        assert gcp_convergence_indicator(s, pc) < 1.0
        assert solve_with("gcp", s, pc, SolveConfig(max_iters=3000)).converged


class TestNormCertificates:
    @given(seed=st.integers(0, 200))
    @settings(max_examples=15, deadline=None)
    def test_certificates_inside_bound(self, seed):
        s = saddle(seed)
        omega = 0.9 * omega_bound_triangular(s.W)
        pc = constraint_pc(s, kind="triangular_split", omega=omega)
        x_norm, pw_norm = norm_certificates(s, pc)
        assert x_norm <= 1.0 + 1e-8
        assert pw_norm < 1.0
        gamma = gcp_convergence_indicator(s, pc)
        assert x_norm * pw_norm >= gamma - 1e-8

    def test_rejects_omega_outside_bound(self):
        s = saddle(4)
        omega = 1.5 * omega_bound_triangular(s.W)
        pc = constraint_pc(s, kind="triangular_split", omega=omega,
                           enforce_pd=False)
        with pytest.raises(ValueError):
            norm_certificates(s, pc)

    def test_rejects_symmetric_kind(self):
        s = saddle(5)
        with pytest.raises(ValueError):
            norm_certificates(s, constraint_pc(s))


def test_eigenvalue_real_parts_symmetric_p():
    # nonzero eigenvalues of X(P-W) with P = omega*H have real part 1 - 1/omega
    s = build_oseen(4, 0.1)
    omega = 1.3
    pc = constraint_pc(s, omega=omega)
    X = compute_X(s, pc)
    lam = np.linalg.eigvals(X @ (pc.P - s.W))
    nonzero = lam[np.abs(lam) > 1e-8]
    assert np.allclose(nonzero.real, 1.0 - 1.0 / omega, atol=1e-6)
