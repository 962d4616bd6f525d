import numpy as np
import pytest

from conftest import random_feasible_point, random_instance
from covpath.data import GeneratorSpec, generate_problem
from covpath.barrier import Problem, feasible, multipliers
from covpath.corrector import CorrectorConfig, corrector_run
from covpath.path import scaling_warm_start, solve_at
from covpath.predictor import (
    CGConfig,
    PredictorSystem,
    build_system,
    cg_solve,
    matvec,
    predictor_step,
    predictor_step_detail,
)
from covpath.reference import explicit_system
from covpath.symmat import pd_factor, symmetrize


def h_of(p, U, t):
    """Residual map on arbitrary (possibly asymmetric) square matrices."""
    L = t / (p.rho + p.sigma - U)
    M = t / (p.rho - p.sigma + U)
    return L - M - np.linalg.inv(U)


class TestBuildSystem:
    def test_closed_forms(self):
        rng = np.random.default_rng(50)
        p = random_instance(rng, 4)
        U = pd_factor(random_feasible_point(rng, p))
        t = 1e-2
        sys = build_system(p, U, t)
        state = multipliers(p, U.matrix, t)
        assert np.allclose(sys.D, (state.L**2 + state.M**2) / t, rtol=1e-14)
        assert np.allclose(sys.rhs, (state.L**2 - state.M**2) / t, rtol=1e-14)
        assert np.all(sys.D > 0)

    def test_rhs_matches_finite_differences_in_rho(self):
        rng = np.random.default_rng(51)
        p = random_instance(rng, 4)
        U = random_feasible_point(rng, p)
        t = 1e-2
        sys = build_system(p, pd_factor(U), t)
        d = 1e-5
        fd = (
            h_of(Problem(sigma=p.sigma, rho=p.rho + d), U, t)
            - h_of(Problem(sigma=p.sigma, rho=p.rho - d), U, t)
        ) / (2 * d)
        scale = max(1.0, np.abs(sys.rhs).max())
        assert np.abs(fd - (-sys.rhs)).max() <= 1e-6 * scale

    def test_jacobian_matches_finite_differences_in_u(self):
        rng = np.random.default_rng(52)
        p = random_instance(rng, 3)
        U = random_feasible_point(rng, p)
        t = 1e-2
        factor = pd_factor(U)
        sys = build_system(p, factor, t)
        d = 1e-5
        for i in range(3):
            for j in range(3):
                E = np.zeros((3, 3))
                E[i, j] = d
                fd = (h_of(p, U + E, t) - h_of(p, U - E, t)) / (2 * d)
                col = np.outer(factor.inverse[:, i], factor.inverse[j, :])
                col = col + sys.D[i, j] * (np.arange(3)[:, None] == i) * (
                    np.arange(3)[None, :] == j
                )
                scale = max(1.0, np.abs(col).max())
                assert np.abs(fd - col).max() <= 1e-5 * scale


class TestMatvec:
    def test_identity_with_unit_diag(self):
        sys = PredictorSystem(U_inv=np.eye(3), D=np.ones((3, 3)), rhs=np.zeros((3, 3)))
        P = symmetrize(np.random.default_rng(53).standard_normal((3, 3)))
        assert np.allclose(matvec(sys, P), 2.0 * P, rtol=1e-14)

    def test_zero_input(self):
        sys = PredictorSystem(U_inv=np.eye(3), D=np.ones((3, 3)), rhs=np.zeros((3, 3)))
        assert np.array_equal(matvec(sys, np.zeros((3, 3))), np.zeros((3, 3)))

    def test_matches_explicit_kronecker(self):
        rng = np.random.default_rng(54)
        p = random_instance(rng, 5)
        U = pd_factor(random_feasible_point(rng, p))
        t = 1e-2
        sys = build_system(p, U, t)
        K = explicit_system(p, U, t)
        for _ in range(5):
            P = symmetrize(rng.standard_normal((5, 5)))
            direct = (K @ P.reshape(-1)).reshape(5, 5)
            assert np.abs(matvec(sys, P) - direct).max() <= 1e-12 * max(1, np.abs(direct).max())

    def test_operator_is_self_adjoint(self):
        rng = np.random.default_rng(55)
        p = random_instance(rng, 4)
        U = pd_factor(random_feasible_point(rng, p))
        sys = build_system(p, U, 1e-3)
        for _ in range(5):
            P = symmetrize(rng.standard_normal((4, 4)))
            Q = symmetrize(rng.standard_normal((4, 4)))
            lhs = np.sum(matvec(sys, P) * Q)
            rhs = np.sum(P * matvec(sys, Q))
            assert lhs == pytest.approx(rhs, rel=1e-10)


class TestCgSolve:
    def test_identity_system_single_iteration(self):
        rng = np.random.default_rng(56)
        rhs = symmetrize(rng.standard_normal((4, 4)))
        sys = PredictorSystem(U_inv=np.eye(4), D=np.ones((4, 4)), rhs=rhs)
        res = cg_solve(sys, CGConfig(rel_drop=1e-10))
        assert res.iterations == 1
        assert res.converged
        assert np.allclose(res.direction, rhs / 2.0, atol=1e-12)

    def test_zero_rhs(self):
        sys = PredictorSystem(U_inv=np.eye(3), D=np.ones((3, 3)), rhs=np.zeros((3, 3)))
        res = cg_solve(sys)
        assert res.iterations == 0
        assert np.array_equal(res.direction, np.zeros((3, 3)))

    def test_matches_dense_solve_at_tight_tolerance(self):
        sigma, _ = generate_problem(GeneratorSpec(n=6, density=0.4, seed=3))
        rho = 0.4 * float(np.max(np.diag(sigma)))
        t = 1e-3 / 72
        p = Problem(sigma=sigma, rho=rho)
        factor = solve_at(sigma, rho, t, CorrectorConfig(tol_residual=1e-9))
        sys = build_system(p, factor, t)
        res = cg_solve(sys, CGConfig(rel_drop=1e-10))
        K = explicit_system(p, factor, t)
        dense = np.linalg.solve(K, sys.rhs.reshape(-1)).reshape(6, 6)
        rel = np.linalg.norm(res.direction - dense) / np.linalg.norm(dense)
        assert rel <= 1e-4

    def test_max_iters_flagged(self):
        rng = np.random.default_rng(58)
        p = random_instance(rng, 5)
        factor = pd_factor(random_feasible_point(rng, p))
        sys = build_system(p, factor, 1e-4)
        res = cg_solve(sys, CGConfig(rel_drop=1e-14, max_iters=1))
        assert res.iterations == 1
        assert not res.converged
        assert res.rel_residual > 0


class TestPredictorStep:
    def test_zero_step_returns_input(self):
        rng = np.random.default_rng(59)
        p = random_instance(rng, 4)
        factor = pd_factor(random_feasible_point(rng, p))
        out = predictor_step(p, factor, 1e-3, 0.0)
        assert np.array_equal(out, factor.matrix)

    def test_scalar_analytic_path_second_order_accuracy(self):
        # for a 1x1 instance the central path solves
        # (1+2t) u^2 - 2 sigma (1+t) u + sigma^2 - rho^2 = 0
        sigma_val, t = 2.0, 0.1

        def u_central(rho):
            a = 1.0 + 2.0 * t
            b = -2.0 * sigma_val * (1.0 + t)
            c = sigma_val**2 - rho**2
            return (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)

        errors = []
        for h in (-0.05, -0.025):
            rho0 = 1.0
            p = Problem(sigma=np.array([[sigma_val]]), rho=rho0)
            U = pd_factor(np.array([[u_central(rho0)]]))
            out, h_used, _ = predictor_step_detail(p, U, t, h, CGConfig(rel_drop=1e-12))
            assert h_used == h
            errors.append(abs(out[0, 0] - u_central(rho0 + h)))
        ratio = errors[0] / errors[1]
        assert 2.5 <= ratio <= 6.5

    def test_backtracks_to_feasible_half_step(self):
        rng = np.random.default_rng(60)
        p = random_instance(rng, 5, density=0.5, rho_frac=0.4)
        t = 1e-3 / 50
        factor = solve_at(p.sigma, p.rho, t, CorrectorConfig(tol_residual=1e-9))
        h = -0.9 * p.rho  # aggressive move toward the dense end
        out, h_used, _ = predictor_step_detail(p, factor, t, h)
        assert abs(h_used) <= abs(h)
        assert feasible(Problem(sigma=p.sigma, rho=p.rho + h_used), out)

    def test_predictor_warm_start_not_worse_than_scaling(self):
        sigma, _ = generate_problem(GeneratorSpec(n=20, density=0.15, seed=5))
        rho0 = 0.5 * float(np.max(np.diag(sigma)))
        t = 1e-3 / (2 * 400)
        factor = solve_at(sigma, rho0, t, CorrectorConfig(tol_residual=1e-8))
        p0 = Problem(sigma=sigma, rho=rho0)
        h = -0.05 * rho0
        rho1 = rho0 + h
        p1 = Problem(sigma=sigma, rho=rho1)
        U_pred, h_used, _ = predictor_step_detail(p0, factor, t, h)
        if h_used != h:
            U_pred = scaling_warm_start(sigma, U_pred, rho0 + h_used, rho1)
        U_scal = scaling_warm_start(sigma, factor.matrix, rho0, rho1)
        cfg = CorrectorConfig(tol_residual=1e-8)
        _, stats_pred = corrector_run(p1, U_pred, t, cfg)
        _, stats_scal = corrector_run(p1, U_scal, t, cfg)
        # diagnostic trend, deliberately slack: the tangent start should
        # not need meaningfully more correction than plain rescaling
        assert stats_pred.sweeps <= stats_scal.sweeps + 1
