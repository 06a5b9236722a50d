"""Smoothed-lp variant: weights, smoothing decay, support fixation."""

import math

import numpy as np
import pytest

from bpiree.experiments import build_problem, desk_spec
from bpiree.lp import lp_weights, solve_lp, support_monitor, update_epsilon
from bpiree.model import (
    BlockPartition,
    LeastSquares,
    Problem,
    SmoothedLp,
)
from bpiree.solver import SolveStatus, SolverConfig, bpiree_step, init_state


def lp_problem(A, b, lam, p, m=1):
    loss = LeastSquares(A, b)
    return Problem(loss, SmoothedLp(lam=lam, p=p), BlockPartition.contiguous(loss.dim, m))


class TestLpWeights:
    def test_hand_value_half(self):
        w = lp_weights(np.zeros(1), np.ones(1), lam=1.0, p=0.5)
        assert w[0] == pytest.approx(0.5)

    def test_hand_value_benchmark_parameters(self):
        w = lp_weights(np.zeros(1), np.ones(1), lam=0.015, p=0.1)
        assert w[0] == pytest.approx(0.0015)

    def test_decreasing_in_magnitude(self):
        x = np.array([0.0, 1.0, 100.0, 1e6])
        w = lp_weights(x, np.ones(4), lam=0.7, p=0.3)
        assert np.all(np.diff(w) < 0)
        assert w[-1] == pytest.approx(0.7 * 0.3 * (1e6 + 1) ** (0.3 - 1))

    def test_rejects_nonpositive_eps(self):
        with pytest.raises(ValueError):
            lp_weights(np.zeros(1), np.zeros(1), lam=1.0, p=0.5)


class TestUpdateEpsilon:
    def test_zero_keeps_eps(self):
        np.testing.assert_array_equal(
            update_epsilon(np.zeros(1), np.array([0.5]), mu=0.1), [0.5]
        )

    def test_nonzero_shrinks_by_sqrt_mu(self):
        out = update_epsilon(np.ones(1), np.ones(1), mu=0.1)
        assert out[0] == pytest.approx(math.sqrt(0.1))

    def test_geometric_decay(self):
        eps = np.ones(1)
        for _ in range(6):
            eps = update_epsilon(np.ones(1), eps, mu=0.25)
        assert eps[0] == pytest.approx(0.25 ** 3)

    def test_mixed_coordinates(self):
        out = update_epsilon(np.array([0.0, 2.0, 0.0]), np.array([1.0, 1.0, 0.5]), 0.1)
        np.testing.assert_allclose(out, [1.0, math.sqrt(0.1), 0.5])

    def test_rejects_bad_mu(self):
        with pytest.raises(ValueError):
            update_epsilon(np.ones(1), np.ones(1), mu=1.0)

    def test_randomized_branch_correctness(self):
        rng = np.random.default_rng(12)
        mu = 0.3
        for _ in range(1000):
            x_new = rng.standard_normal(4) * rng.integers(0, 2, size=4)
            eps = rng.uniform(0.01, 2.0, size=4)
            out = update_epsilon(x_new, eps, mu)
            for j in range(4):
                if x_new[j] == 0.0:
                    assert out[j] == eps[j]
                else:
                    assert out[j] == math.sqrt(mu) * eps[j]


class TestSolveLp:
    def test_requires_smoothed_penalty(self):
        from bpiree.model import LogPenalty

        loss = LeastSquares(np.eye(2), np.zeros(2))
        prob = Problem(loss, LogPenalty(lam=1.0, eps_bar=1.0), BlockPartition.single(2))
        with pytest.raises(ValueError):
            solve_lp(prob, SolverConfig(), np.zeros(2))

    def test_lam_zero_reduces_to_smooth_solver(self):
        # identical iterates to the unpenalized solver, but eps still decays
        prob = lp_problem(np.eye(2), np.array([1.0, -1.0]), lam=0.0, p=0.5)
        config = SolverConfig(momentum="none")
        x, eps, trace, status = solve_lp(prob, config, np.zeros(2))
        assert status is SolveStatus.CONVERGED
        np.testing.assert_allclose(x, [1.0, -1.0], atol=1e-3)
        assert np.all(eps < 1.0)  # every coordinate went nonzero at least once

    def test_eps_branch_correct_along_run(self):
        prob, _ = build_problem(desk_spec("matrix_lp", seed=0))
        config = SolverConfig(momentum="fista", mu=0.1)
        state = init_state(prob, config, np.zeros(prob.loss.dim))
        for _ in range(200):
            eps_before = state.eps.copy()
            bpiree_step(state, prob, config)
            idx = prob.partition.blocks[state.last_step.block]
            changed = np.zeros(prob.loss.dim, dtype=bool)
            changed[idx] = True
            # untouched coordinates keep eps
            np.testing.assert_array_equal(state.eps[~changed], eps_before[~changed])
            # updated block: eps fixed at zeros, shrunk by sqrt(mu) elsewhere
            new_vals = state.x[idx]
            expected = np.where(
                new_vals == 0.0,
                eps_before[idx],
                math.sqrt(config.mu) * eps_before[idx],
            )
            np.testing.assert_allclose(state.eps[idx], expected, rtol=1e-15)
            assert np.all(state.eps > 0)
            assert np.all(state.eps <= eps_before + 1e-15)

    def test_objective_nonincreasing(self):
        prob, _ = build_problem(desk_spec("matrix_lp", seed=1))
        config = SolverConfig(momentum="fista", record_trace=True)
        _, _, trace, status = solve_lp(prob, config, np.zeros(prob.loss.dim))
        F = [rec.F for rec in trace.records]
        for prev, nxt in zip(F, F[1:]):
            assert nxt <= prev + 1e-12 * (1 + abs(prev))

    def test_desk_instance_recovers_support(self):
        spec = desk_spec("matrix_lp", seed=1)
        prob, x_true = build_problem(spec)
        config = SolverConfig(momentum="fista")
        x, eps, trace, status = solve_lp(prob, config, np.zeros(prob.loss.dim))
        assert status is SolveStatus.CONVERGED
        assert np.array_equal(np.flatnonzero(x), np.flatnonzero(x_true))

    def test_support_fixed_at_termination(self):
        # a tight tolerance leaves a long sign-stable polishing tail after
        # the terminal pruning cascade
        prob, _ = build_problem(desk_spec("matrix_lp", seed=3))
        config = SolverConfig(momentum="fista", record_trace=True, tol=1e-8)
        x, eps, trace, status = solve_lp(prob, config, np.zeros(prob.loss.dim))
        assert status is SolveStatus.CONVERGED
        assert trace.support is not None
        assert trace.support.fixed
        np.testing.assert_array_equal(trace.support.sign, np.sign(x))
        assert trace.records[-1].sign_fixed

    def test_support_magnitude_floor(self):
        prob, _ = build_problem(desk_spec("matrix_lp", seed=4))
        x, _, _, status = solve_lp(
            prob, SolverConfig(momentum="fista"), np.zeros(prob.loss.dim)
        )
        assert status is SolveStatus.CONVERGED
        support = np.abs(x[x != 0.0])
        assert support.min() > 10 * np.finfo(float).eps * np.linalg.norm(x)

    def test_faster_decay_fixes_signs_no_later(self):
        # regression expectation on a fixed seed, not a guarantee
        spec = desk_spec("matrix_lp", seed=5)
        prob, _ = build_problem(spec)
        K = {}
        for mu in (0.1, 0.99):
            config = SolverConfig(momentum="fista", mu=mu)
            _, _, trace, status = solve_lp(prob, config, np.zeros(prob.loss.dim))
            assert status is SolveStatus.CONVERGED
            K[mu] = trace.support.K_observed
        assert K[0.1] <= K[0.99]

    def test_eps_decay_on_final_support(self):
        prob, _ = build_problem(desk_spec("matrix_lp", seed=6))
        config = SolverConfig(momentum="fista", mu=0.1)
        x, eps, trace, status = solve_lp(prob, config, np.zeros(prob.loss.dim))
        assert status is SolveStatus.CONVERGED
        support = x != 0.0
        assert np.all(eps[support] <= 0.1**5 * config.eps0)


class TestSupportMonitor:
    def test_constant_throughout(self):
        signs = [np.array([1, 0, -1])] * 7
        report = support_monitor(signs, window=5)
        assert report.fixed
        assert report.K_observed == 1
        np.testing.assert_array_equal(report.sign, [1, 0, -1])

    def test_flip_then_constant(self):
        before = np.array([1, 1])
        after = np.array([1, -1])
        signs = [before] * 50 + [after] * 30
        report = support_monitor(signs, window=10)
        assert report.fixed
        assert report.K_observed == 51

    def test_window_not_yet_satisfied(self):
        before = np.array([1])
        after = np.array([-1])
        signs = [before] * 50 + [after] * 5
        report = support_monitor(signs, window=10)
        assert not report.fixed
        assert report.K_observed == 51

    def test_short_constant_history_counts(self):
        signs = [np.array([1, 1])] * 3
        assert support_monitor(signs, window=100).fixed

    def test_empty_history(self):
        report = support_monitor([], window=5)
        assert not report.fixed
        assert report.K_observed is None

    def test_rejects_bad_window(self):
        with pytest.raises(ValueError):
            support_monitor([np.ones(1)], window=0)


class TestLpTrace:
    def test_trace_columns_present(self):
        prob, _ = build_problem(desk_spec("matrix_lp", seed=7))
        config = SolverConfig(momentum="fista", record_trace=True, max_iter=50)
        _, _, trace, _ = solve_lp(prob, config, np.zeros(prob.loss.dim))
        rec = trace.records[-1]
        assert rec.eps_min <= rec.eps_max <= 1.0
        assert 0 <= rec.support_size <= prob.loss.dim
        assert isinstance(rec.sign_fixed, (bool, np.bool_))
