"""Baselines: momentum clock, reweighted full-vector methods, block sweeps."""

import math

import numpy as np
import pytest

from bpiree.baselines import (
    irl1_solve,
    irl1e1_solve,
    pire_au_solve,
    pire_ps_solve,
    pire_solve,
)
from bpiree.experiments import build_problem, desk_spec
from bpiree.model import (
    BlockPartition,
    LeastSquares,
    LogPenalty,
    Problem,
)
from bpiree.momentum import MomentumClock, fista_momentum
from bpiree.solver import SolveStatus, SolverConfig, solve


def log_problem(A, b, lam=0.0, eps_bar=1.0, m=1):
    loss = LeastSquares(A, b)
    return Problem(
        loss, LogPenalty(lam=lam, eps_bar=eps_bar), BlockPartition.contiguous(loss.dim, m)
    )


class TestFistaMomentum:
    def test_fresh_clock_gives_zero(self):
        beta, clock = fista_momentum(MomentumClock())
        assert beta == 0.0
        assert clock.t_curr == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-12)

    def test_second_value(self):
        _, clock = fista_momentum(MomentumClock())
        beta, _ = fista_momentum(clock)
        assert beta == pytest.approx(0.281754, abs=1e-6)

    def test_restart_resets(self):
        clock = MomentumClock(N=5)
        betas = []
        for _ in range(6):
            beta, clock = fista_momentum(clock)
            betas.append(beta)
        # call 5 triggers the reset, so call 6 is zero again
        assert clock.steps_since_restart == 1
        assert betas[5] == 0.0
        assert all(b > 0 for b in betas[1:5])

    def test_values_in_unit_interval_and_nondecreasing(self):
        clock = MomentumClock(N=100)
        betas = []
        for _ in range(99):
            beta, clock = fista_momentum(clock)
            betas.append(beta)
        assert all(0.0 <= b < 1.0 for b in betas)
        assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))


class TestPire:
    def test_lam_zero_converges_on_quadratic(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((8, 4))
        x_star = rng.standard_normal(4)
        prob = log_problem(A, A @ x_star)
        x, trace, status = pire_solve(prob, SolverConfig(tol=1e-8), np.zeros(4))
        assert status is SolveStatus.CONVERGED
        np.testing.assert_allclose(x, x_star, atol=1e-6)

    def test_one_iteration_hand_example(self):
        # A = 1, b = 1, log penalty lam = 1, eps_bar = 1, x0 = 0:
        # L = 1.01, w = 1, center = 1/1.01, tau = 1/1.01 -> soft -> 0
        prob = log_problem(np.eye(1), np.ones(1), lam=1.0, eps_bar=1.0)
        x, trace, status = pire_solve(prob, SolverConfig(max_iter=1), np.zeros(1))
        assert x[0] == 0.0

    def test_matches_block_solver_final_objective(self):
        # same critical point despite the stepsize convention difference
        from bpiree.model import eval_objective

        rng = np.random.default_rng(1)
        for seed in range(20):
            r = np.random.default_rng(seed)
            A = r.standard_normal((10, 5))
            b = r.standard_normal(10)
            prob = log_problem(A, b, lam=1e-3, eps_bar=0.1)
            cfg = SolverConfig(tol=1e-10, momentum="none", gamma=1.0001)
            x_b, _, s1 = solve(prob, cfg, np.zeros(5))
            x_p, _, s2 = pire_solve(prob, SolverConfig(tol=1e-10), np.zeros(5))
            F_b = eval_objective(prob.loss, prob.penalty, x_b)
            F_p = eval_objective(prob.loss, prob.penalty, x_p)
            assert abs(F_b - F_p) <= 1e-6

    def test_monotone_descent(self):
        prob, _ = build_problem(desk_spec("log_ls", seed=3))
        config = SolverConfig(record_trace=True, max_iter=400)
        _, trace, _ = pire_solve(prob, config, np.zeros(prob.loss.dim))
        F = [rec.F for rec in trace.records]
        assert all(b <= a + 1e-12 * (1 + abs(a)) for a, b in zip(F, F[1:]))


class TestIrl1:
    def test_requires_abs_g(self):
        from bpiree.model import CustomPenalty

        loss = LeastSquares(np.eye(2), np.zeros(2))
        pen = CustomPenalty(lam=1.0, h=lambda t: t, h_prime=lambda t: 1.0,
                            g=lambda u: u * u)
        prob = Problem(loss, pen, BlockPartition.single(2))
        with pytest.raises(ValueError):
            irl1_solve(prob, SolverConfig(), np.zeros(2))

    def test_first_steps_agree_with_and_without_momentum(self):
        prob, _ = build_problem(desk_spec("log_ls", seed=1))
        x0 = np.zeros(prob.loss.dim)
        cfg = SolverConfig(max_iter=1, record_trace=True)
        x_a, _, _ = irl1_solve(prob, cfg, x0)
        x_b, _, _ = irl1e1_solve(prob, cfg, x0)
        np.testing.assert_array_equal(x_a, x_b)

    def test_unit_restart_period_disables_momentum(self):
        # N = 1 resets the clock every call, so irl1e1 degenerates to irl1
        prob, _ = build_problem(desk_spec("log_ls", seed=2))
        x0 = np.zeros(prob.loss.dim)
        cfg_plain = SolverConfig(record_trace=True, max_iter=300)
        cfg_reset = SolverConfig(record_trace=True, max_iter=300, fista_restart_N=1)
        x_a, tr_a, _ = irl1_solve(prob, cfg_plain, x0)
        x_b, tr_b, _ = irl1e1_solve(prob, cfg_reset, x0)
        np.testing.assert_array_equal(x_a, x_b)
        assert [r.F for r in tr_a.records] == [r.F for r in tr_b.records]

    def test_momentum_speeds_up_on_most_seeds(self):
        wins = 0
        for seed in range(10):
            prob, _ = build_problem(desk_spec("log_ls", seed=seed))
            x0 = np.zeros(prob.loss.dim)
            _, tr_plain, s1 = irl1_solve(prob, SolverConfig(max_iter=20000), x0)
            _, tr_mom, s2 = irl1e1_solve(prob, SolverConfig(max_iter=20000), x0)
            assert s1 is SolveStatus.CONVERGED and s2 is SolveStatus.CONVERGED
            wins += tr_mom.iterations < tr_plain.iterations
        assert wins >= 8


class TestSweepMethods:
    def test_single_block_degeneracy(self):
        # with one block pire, pire-ps and pire-au take identical iterates
        prob, _ = build_problem(desk_spec("log_ls", seed=4))
        x0 = np.zeros(prob.loss.dim)
        cfg = SolverConfig(max_iter=40, record_trace=True)
        xs = {}
        for name, fn in (("pire", pire_solve), ("ps", pire_ps_solve), ("au", pire_au_solve)):
            x, trace, _ = fn(prob, cfg, x0)
            xs[name] = (x, [r.F for r in trace.records])
        np.testing.assert_array_equal(xs["pire"][0], xs["ps"][0])
        assert xs["pire"][1] == xs["ps"][1]
        # the sequential sweep maintains its residual incrementally, which
        # perturbs the last ulp
        np.testing.assert_allclose(xs["pire"][0], xs["au"][0], rtol=0, atol=1e-13)
        np.testing.assert_allclose(xs["pire"][1], xs["au"][1], rtol=1e-13)

    def test_gauss_seidel_beats_jacobi_on_coupled_quadratic(self):
        A = np.array([[2.0, 1.0], [1.0, 2.0]])
        prob = log_problem(A, np.ones(2), m=2)
        cfg = SolverConfig(tol=1e-8)
        _, tr_ps, s_ps = pire_ps_solve(prob, cfg, np.zeros(2))
        _, tr_au, s_au = pire_au_solve(prob, cfg, np.zeros(2))
        assert s_ps is SolveStatus.CONVERGED and s_au is SolveStatus.CONVERGED
        assert tr_au.iterations < tr_ps.iterations

    def test_monotone_on_matrix_instance(self):
        prob, _ = build_problem(desk_spec("matrix_lp", seed=0))
        x0 = np.zeros(prob.loss.dim)
        for fn in (pire_ps_solve, pire_au_solve):
            _, trace, status = fn(
                prob, SolverConfig(record_trace=True, max_iter=3000), x0
            )
            F = [rec.F for rec in trace.records]
            assert all(b <= a + 1e-12 * (1 + abs(a)) for a, b in zip(F, F[1:]))


class TestAgreementAtLamZero:
    def test_all_methods_find_the_same_minimizer(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((12, 6))
        x_star = rng.standard_normal(6)
        b = A @ x_star
        prob = log_problem(A, b, lam=0.0, m=2)
        x0 = np.zeros(6)
        cfg = SolverConfig(tol=1e-12, max_iter=200000)
        sols = [
            solve(prob, cfg, x0)[0],
            pire_solve(prob, cfg, x0)[0],
            irl1_solve(prob, cfg, x0)[0],
            irl1e1_solve(prob, cfg, x0)[0],
            pire_ps_solve(prob, cfg, x0)[0],
            pire_au_solve(prob, cfg, x0)[0],
        ]
        for s in sols:
            np.testing.assert_allclose(s, x_star, atol=1e-8)
