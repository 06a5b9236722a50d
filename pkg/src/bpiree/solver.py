"""Block proximal iteratively reweighted solver with extrapolation.

One iteration picks a block, forms an extrapolated point from the block's
last two values, evaluates the majorization weights at the previous
iterate, and solves the weighted proximal subproblem with stepsize
``1/(gamma * L_block)``.  A monotone safeguard redoes an iteration once
with zero momentum whenever the extrapolated step increased the objective,
which keeps the objective sequence nonincreasing.
"""

from __future__ import annotations

import functools
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from .model import (
    Problem,
    SmoothedLp,
    penalty_value,
    penalty_weights,
)
from .momentum import MomentumClock, fista_momentum
from .prox import NumericalFailure, block_prox_step

__all__ = [
    "SolveStatus",
    "SolverConfig",
    "SolverState",
    "TraceRecord",
    "LpTraceRecord",
    "CertificateRecord",
    "Trace",
    "choose_block",
    "extrapolation_bound",
    "extrapolate",
    "init_state",
    "bpiree_step",
    "solve",
    "stationarity_residual",
    "descent_certificate",
]

logger = logging.getLogger("bpiree")

# Guard for relative-step denominators so the zero iterate never divides by 0.
NORM_FLOOR = 1e-12
# Long runs decay smoothing factors geometrically; float64 underflows to 0
# after ~600 shrinks, which would blow up the lp weights on coordinates that
# go to zero afterwards.  This floor is far below any numerically meaningful
# smoothing level and keeps the positivity invariant true in floats.
EPS_FLOOR = 1e-100

MOMENTUM_MODES = ("fista_capped", "fista", "bound", "none")
SCHEDULES = ("cyclic", "shuffled")


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverConfig:
    """Tuning knobs for the block solver and its relatives.

    Attributes
    ----------
    gamma : stepsize divisor, ``alpha = 1/(gamma * L_block)``; must exceed 1.
    delta : safety fraction (0, 1) inside the admissible momentum bound.
    schedule : "cyclic" or "shuffled" (seeded reshuffled cycles).
    seed : seed for the shuffled schedule.
    T : essentially-cyclic window bound (defaults to the block count).
    momentum : "fista_capped" caps the restarted FISTA value at the
        admissible bound; "fista" uses the raw FISTA value and relies on
        the safeguard; "bound" always uses the bound; "none" disables it.
    fista_restart_N : restart period of the momentum recurrence.
    mu : smoothing decay factor for the lp variant, in (0, 1).
    eps0 : initial per-coordinate smoothing factor for the lp variant.
    support_window : ring-buffer length for sign-pattern tracking (lp).
    safeguard : redo an iteration with zero momentum if the objective rose.
    record_trace : collect one TraceRecord per iteration.
    record_residual : also compute the stationarity residual per iteration
        (one extra full gradient per iteration; off by default).
    check_descent : evaluate the per-iteration descent certificate.
    """

    gamma: float = 2.0
    delta: float = 0.9
    schedule: str = "cyclic"
    seed: int = 0
    T: Optional[int] = None
    max_iter: int = 100_000
    tol: float = 1e-4
    safeguard: bool = True
    momentum: str = "fista_capped"
    fista_restart_N: int = 200
    mu: float = 0.1
    eps0: float = 1.0
    support_window: int = 100
    record_trace: bool = False
    record_residual: bool = False
    check_descent: bool = False

    def validate(self, m: Optional[int] = None) -> None:
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must lie in (0, 1)")
        if self.eps0 <= 0.0:
            raise ValueError("eps0 must be positive")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.momentum not in MOMENTUM_MODES:
            raise ValueError(f"unknown momentum mode {self.momentum!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.fista_restart_N < 1:
            raise ValueError("fista_restart_N must be positive")
        if self.support_window < 1:
            raise ValueError("support_window must be positive")
        if m is not None and self.T is not None and self.T < m:
            raise ValueError("T must be at least the number of blocks")


@dataclass
class TraceRecord:
    """Per-iteration telemetry; ``step_rel`` uses full-vector norms."""

    k: int
    F: float
    step_rel: float
    residual: float
    beta_used: float
    block: int
    retried: bool
    wall_ns: int


@dataclass
class LpTraceRecord(TraceRecord):
    eps_min: float = math.nan
    eps_max: float = math.nan
    support_size: int = 0
    sign_fixed: bool = False


@dataclass
class CertificateRecord:
    k: int
    holds: bool
    slack: float


@dataclass
class Trace:
    """Everything a run reports besides the final iterate."""

    records: List[TraceRecord] = field(default_factory=list)
    certificates: List[CertificateRecord] = field(default_factory=list)
    iterations: int = 0
    final_step_rel: float = math.nan
    support: Optional[object] = None  # SupportReport for lp runs


@dataclass
class _StepInfo:
    block: int
    beta_used: float
    retried: bool
    changed: bool
    step_norm: float
    prev_step_norm: float
    step_rel: float
    L_curr: float
    L_prev: float
    F_prev: float
    F_next: float


@dataclass
class SolverState:
    """Mutable iteration state.

    ``prev_block_values[i]`` holds the value of block ``i`` before its last
    update (the extrapolation anchor), ``update_counts`` the number of
    times each block has been updated (their sum equals ``k``), and
    ``weights`` the majorization weights most recently used for each
    coordinate.  ``eps`` is present only for the smoothed-lp penalty.
    """

    x: np.ndarray
    prev_block_values: List[np.ndarray]
    update_counts: np.ndarray
    last_block_L: np.ndarray
    weights: np.ndarray
    F_current: float
    k: int = 0
    eps: Optional[np.ndarray] = None
    clock: MomentumClock = field(default_factory=MomentumClock)
    # internal caches / bookkeeping (not part of the public contract)
    residual: Optional[np.ndarray] = field(default=None, repr=False)
    small_step_run: int = 0
    last_step: Optional[_StepInfo] = field(default=None, repr=False)


@dataclass
class LpState(SolverState):
    """Solver state extended with sign-pattern tracking for the lp variant."""

    p: float = 0.5
    support_history: deque = field(default_factory=lambda: deque(maxlen=100))
    sign_run_start: int = 1
    _sign_current: Optional[np.ndarray] = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# elementary operations
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _cycle_permutation(seed: int, cycle: int, m: int) -> tuple:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, cycle)))
    return tuple(int(v) for v in rng.permutation(m))


def choose_block(schedule: str, k: int, m: int, seed: int = 0) -> int:
    """Block index (0-based) updated at iteration ``k`` (1-based).

    "cyclic" returns ``(k-1) mod m``; "shuffled" walks a concatenation of
    seeded uniform permutations of ``{0..m-1}``, one per cycle.  Every
    window of ``m`` (cyclic) or ``2m-1`` (shuffled) consecutive picks
    contains all blocks.
    """
    if k < 1:
        raise ValueError("iteration counter k starts at 1")
    if m < 1:
        raise ValueError("need at least one block")
    if schedule == "cyclic":
        return (k - 1) % m
    if schedule == "shuffled":
        cycle, pos = divmod(k - 1, m)
        return _cycle_permutation(seed, cycle, m)[pos]
    raise ValueError(f"unknown schedule {schedule!r}")


def extrapolation_bound(L_prev: float, L_curr: float, gamma: float, delta: float) -> float:
    """Largest admissible momentum for the descent estimate at divisor gamma.

    Equals ``delta * (gamma-1) / (2*(gamma+1)) * sqrt(L_prev / L_curr)``;
    with ``gamma = 2`` the coefficient is ``delta / 6``.
    """
    if L_prev <= 0 or L_curr <= 0:
        raise ValueError("curvature constants must be positive")
    if not gamma > 1.0:
        raise ValueError("gamma must exceed 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return delta * (gamma - 1.0) / (2.0 * (gamma + 1.0)) * math.sqrt(L_prev / L_curr)


def extrapolate(x_curr, x_prev, beta: float) -> np.ndarray:
    """Extrapolated point ``x_curr + beta * (x_curr - x_prev)``."""
    x_curr = np.asarray(x_curr, dtype=np.float64)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    return x_curr + beta * (x_curr - x_prev)


def descent_certificate(
    F_prev: float,
    F_next: float,
    L_curr: float,
    L_prev: float,
    beta: float,
    step_norm: float,
    prev_step_norm: float,
    gamma: float,
):
    """Check the per-iteration sufficient-decrease estimate.

    Verifies ``F_prev - F_next >= c1*L_curr*step_norm^2
    - c2*L_curr*beta^2*prev_step_norm^2`` with ``c1 = (gamma-1)/4`` and
    ``c2 = (gamma+1)^2/(gamma-1)`` (1/4 and 9 at gamma = 2), within an
    absolute slack of ``1e-9 * (1 + |F_prev|)``.  Returns a
    :class:`CertificateRecord` with ``k = -1`` (callers fill in the
    iteration); ``slack`` is the signed margin.
    """
    c1 = (gamma - 1.0) / 4.0
    c2 = (gamma + 1.0) ** 2 / (gamma - 1.0)
    rhs = c1 * L_curr * step_norm**2 - c2 * L_curr * beta**2 * prev_step_norm**2
    slack = (F_prev - F_next) - rhs
    holds = slack >= -1e-9 * (1.0 + abs(F_prev))
    return CertificateRecord(k=-1, holds=holds, slack=slack)


# ---------------------------------------------------------------------------
# state setup and the main iteration
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _block_plans(problem: Problem) -> tuple:
    return tuple(problem.loss.block_plan(b) for b in problem.partition.blocks)


def init_state(problem: Problem, config: SolverConfig, x0) -> SolverState:
    """Build a consistent starting state at ``x0`` (momentum history empty)."""
    config.validate(problem.partition.m)
    x0 = np.asarray(x0, dtype=np.float64).ravel().copy()
    if x0.shape[0] != problem.loss.dim:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {problem.loss.dim}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    plans = _block_plans(problem)
    eps = None
    if problem.smoothed_lp:
        eps = np.full(x0.shape[0], config.eps0, dtype=np.float64)
    common = dict(
        x=x0,
        prev_block_values=[x0[b].copy() for b in problem.partition.blocks],
        update_counts=np.zeros(problem.partition.m, dtype=np.int64),
        last_block_L=np.array([plan.lipschitz for plan in plans]),
        weights=penalty_weights(problem.penalty, x0, eps),
        F_current=eval_objective_cached(problem, x0, eps),
        eps=eps,
        clock=MomentumClock(N=config.fista_restart_N),
        residual=problem.loss.residual(x0),
    )
    if problem.smoothed_lp:
        state = LpState(
            **common,
            p=problem.penalty.p,
            support_history=deque(maxlen=config.support_window),
        )
        state._sign_current = np.sign(x0).astype(np.int8)
        return state
    return SolverState(**common)


def eval_objective_cached(problem, x, eps):
    return problem.loss.value(x) + penalty_value(problem.penalty, x, eps)


def _penalty_g(penalty):
    # (g, g_subgrad) for the prox kernel; None means absolute value
    if getattr(penalty, "g_is_abs", False):
        return None, None
    return penalty.g, penalty.g_subgrad


def bpiree_step(state: SolverState, problem: Problem, config: SolverConfig) -> SolverState:
    """Run one iteration in place and return the state.

    Raises :class:`~bpiree.prox.NumericalFailure` if the accepted iterate
    or objective is not finite.  Details of the step (block, momentum,
    retry flag, step norms) are left in ``state.last_step``.
    """
    partition = problem.partition
    plans = _block_plans(problem)
    k = state.k + 1
    b = choose_block(config.schedule, k, partition.m, config.seed)
    idx = partition.blocks[b]
    plan = plans[b]

    L_curr = plan.lipschitz
    L_prev = float(state.last_block_L[b])
    alpha = 1.0 / (config.gamma * L_curr)

    if config.momentum in ("fista", "fista_capped"):
        beta_sched, state.clock = fista_momentum(state.clock)
    else:
        beta_sched = 0.0
    bound = extrapolation_bound(L_prev, L_curr, config.gamma, config.delta)
    if config.momentum == "fista_capped":
        beta = min(beta_sched, bound)
    elif config.momentum == "fista":
        beta = beta_sched
    elif config.momentum == "bound":
        beta = bound
    else:
        beta = 0.0
    beta = min(beta, 1.0)  # extrapolation range is [0, 1]
    # No usable two-point history for a block's first two updates.
    if state.update_counts[b] < 2:
        beta = 0.0

    x_block = state.x[idx]
    x_prev_block = state.prev_block_values[b]
    prev_step_norm = float(np.linalg.norm(x_block - x_prev_block))
    eps_block = state.eps[idx] if state.eps is not None else None
    if eps_block is not None:
        w_block = problem.penalty.weights(x_block, eps_block)
    else:
        w_block = problem.penalty.weights(x_block)
    g, g_subgrad = _penalty_g(problem.penalty)

    pen_others = state.F_current - problem.loss.value_from_residual(state.residual)
    if eps_block is not None:
        pen_others -= problem.penalty.value(x_block, eps_block)
    else:
        pen_others -= problem.penalty.value(x_block)

    def attempt(beta_try):
        x_hat = extrapolate(x_block, x_prev_block, beta_try)
        r_hat = plan.residual_after_delta(state.residual, x_hat - x_block)
        grad = plan.grad_from_residual(r_hat)
        new_block = block_prox_step(x_hat, grad, alpha, w_block, g=g, g_subgrad=g_subgrad)
        r_new = plan.residual_after_delta(r_hat, new_block - x_hat)
        f_new = problem.loss.value_from_residual(r_new)
        if eps_block is not None:
            pen_block = problem.penalty.value(new_block, eps_block)
        else:
            pen_block = problem.penalty.value(new_block)
        return new_block, r_new, f_new + pen_others + pen_block

    F_prev = state.F_current
    new_block, r_new, F_new = attempt(beta)
    retried = False
    # Safeguard: an increase (or a non-finite value) from an extrapolated
    # step is redone once with zero momentum and accepted.
    if config.safeguard and beta > 0.0 and not F_new <= F_prev:
        beta = 0.0
        new_block, r_new, F_new = attempt(beta)
        retried = True

    if not (np.isfinite(F_new) and np.all(np.isfinite(new_block))):
        raise NumericalFailure(
            f"non-finite result at iteration {k} (block {b}, F={F_new!r})"
        )

    step_vec = new_block - x_block
    step_norm = float(np.linalg.norm(step_vec))
    denom = max(float(np.linalg.norm(state.x)), NORM_FLOOR)
    step_rel = step_norm / denom

    state.prev_block_values[b] = x_block.copy()
    state.x[idx] = new_block
    state.residual = r_new
    state.update_counts[b] += 1
    state.last_block_L[b] = L_curr
    state.weights[idx] = w_block
    state.k = k

    if state.eps is not None:
        new_eps = np.maximum(
            SmoothedLp.decay_epsilon(new_block, eps_block, config.mu), EPS_FLOOR
        )
        if not np.array_equal(new_eps, eps_block):
            # shrinking eps only lowers the penalty; adjust F for the block
            F_new += problem.penalty.value(new_block, new_eps) - problem.penalty.value(
                new_block, eps_block
            )
        state.eps[idx] = new_eps
        if isinstance(state, LpState):
            sign = np.sign(state.x).astype(np.int8)
            if state._sign_current is None or not np.array_equal(sign, state._sign_current):
                state.sign_run_start = k
                state._sign_current = sign
            state.support_history.append(sign)
    state.F_current = F_new

    state.last_step = _StepInfo(
        block=b,
        beta_used=beta,
        retried=retried,
        changed=step_norm > 0.0,
        step_norm=step_norm,
        prev_step_norm=prev_step_norm,
        step_rel=step_rel,
        L_curr=L_curr,
        L_prev=L_prev,
        F_prev=F_prev,
        F_next=F_new,
    )
    return state


# ---------------------------------------------------------------------------
# the full solve loop
# ---------------------------------------------------------------------------


def _coverage_window(config: SolverConfig, m: int) -> int:
    return m if config.schedule == "cyclic" else 2 * m - 1


def _fresh_weights(problem, state):
    return penalty_weights(problem.penalty, state.x, state.eps)


def _make_record(problem, state, config, info, wall_ns):
    residual = math.nan
    if config.record_residual and getattr(problem.penalty, "g_is_abs", False):
        residual = stationarity_residual(problem, state.x, _fresh_weights(problem, state))
    base = dict(
        k=state.k,
        F=state.F_current,
        step_rel=info.step_rel,
        residual=residual,
        beta_used=info.beta_used,
        block=info.block,
        retried=info.retried,
        wall_ns=wall_ns,
    )
    if state.eps is None:
        return TraceRecord(**base)
    run_len = state.k - state.sign_run_start + 1
    return LpTraceRecord(
        **base,
        eps_min=float(state.eps.min()),
        eps_max=float(state.eps.max()),
        support_size=int(np.count_nonzero(state.x)),
        sign_fixed=run_len >= min(config.support_window, state.k),
    )


def solve_state(problem: Problem, config: SolverConfig, x0, callback=None):
    """Like :func:`solve` but returns the final state instead of the iterate."""
    state = init_state(problem, config, x0)
    trace = Trace()
    window = _coverage_window(config, problem.partition.m)
    status = SolveStatus.MAX_ITER
    for _ in range(config.max_iter):
        t0 = time.perf_counter_ns() if config.record_trace else 0
        try:
            bpiree_step(state, problem, config)
        except NumericalFailure as exc:
            logger.warning("solver stopped: %s", exc)
            status = SolveStatus.NUMERICAL_FAILURE
            break
        info = state.last_step
        if config.record_trace:
            trace.records.append(
                _make_record(problem, state, config, info, time.perf_counter_ns() - t0)
            )
        if config.check_descent:
            cert = descent_certificate(
                info.F_prev,
                info.F_next,
                info.L_curr,
                info.L_prev,
                info.beta_used,
                info.step_norm,
                info.prev_step_norm,
                config.gamma,
            )
            cert.k = state.k
            trace.certificates.append(cert)
        if callback is not None:
            callback(state.k, state.x)
        if state.k % 1000 == 0:
            logger.debug(
                "iter %d block %d F=%.8e step_rel=%.3e",
                state.k,
                info.block,
                state.F_current,
                info.step_rel,
            )
        trace.final_step_rel = info.step_rel
        # Stopping: the relative-step criterion must hold on a full window
        # of consecutive iterations (m cyclic, 2m-1 shuffled), so every
        # block's latest update was small.  A single small block update is
        # not evidence of joint convergence; with one block this reduces to
        # the plain per-iteration criterion.
        if info.step_rel < config.tol:
            state.small_step_run += 1
            if state.small_step_run >= window:
                status = SolveStatus.CONVERGED
                break
        else:
            state.small_step_run = 0
    trace.iterations = state.k
    if isinstance(state, LpState):
        from .lp import SupportReport  # local import avoids a cycle

        run_len = state.k - state.sign_run_start + 1
        fixed = state.k > 0 and run_len >= min(config.support_window, state.k)
        trace.support = SupportReport(
            fixed=fixed,
            K_observed=state.sign_run_start if state.k > 0 else None,
            sign=state._sign_current,
        )
    return state, trace, status


def solve(problem: Problem, config: SolverConfig, x0, callback=None):
    """Minimize ``F`` from ``x0``; returns ``(x_final, trace, status)``.

    Iterates :func:`bpiree_step` until the relative step
    ``||x^k - x^{k-1}|| / max(||x^{k-1}||, 1e-12)`` stays below
    ``config.tol`` for a full schedule window of consecutive iterations
    (every block's latest update was small), or ``max_iter`` is reached.
    Numeric breakdown is reported through the status rather than raised.
    ``callback(k, x)``, when given, runs after every accepted iteration.
    """
    state, trace, status = solve_state(problem, config, x0, callback=callback)
    return state.x, trace, status


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def stationarity_residual(problem: Problem, x, weights) -> float:
    """Exact distance from 0 to the objective's subdifferential at ``x``.

    Only available for the absolute-value ``g``.  ``weights`` must hold
    ``lam * h'(|x_j|)`` evaluated at ``x`` (including the smoothing factors
    for the lp penalty).  Coordinate-wise the residual is
    ``grad_j + w_j * sign(x_j)`` on the support and
    ``max(|grad_j| - w_j, 0)`` at zeros.
    """
    if not getattr(problem.penalty, "g_is_abs", False):
        raise NotImplementedError(
            "stationarity residual is only defined for the absolute-value g"
        )
    x = np.asarray(x, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if weights.shape != x.shape:
        raise ValueError("weights must have the same length as x")
    grad = problem.loss.grad(x)
    r = np.where(
        x != 0.0,
        grad + weights * np.sign(x),
        np.maximum(np.abs(grad) - weights, 0.0),
    )
    return float(np.linalg.norm(r))
