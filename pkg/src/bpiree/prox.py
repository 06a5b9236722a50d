"""Scalar weighted proximal operators for the block subproblems.

Every block update reduces to coordinate-wise problems

    argmin_x  tau * g(x) + 0.5 * (x - v)^2,

with effective weight ``tau = alpha * w_j``.  For ``g = |.|`` the solution
is the soft threshold; for a general convex ``g`` the unique minimizer is
found by bisection on the monotone optimality map ``x - v + tau * dg(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = [
    "NumericalFailure",
    "ScalarProxProblem",
    "abs_subgrad",
    "prox_weighted_abs",
    "prox_scalar_convex",
    "block_prox_step",
]


class NumericalFailure(RuntimeError):
    """A numeric routine could not produce a finite, trustworthy result."""


def prox_weighted_abs(v, tau):
    """Soft threshold: ``argmin_x tau*|x| + 0.5*(x - v)^2``.

    Accepts scalars or arrays (applied elementwise).  Requires finite
    inputs and ``tau >= 0``.
    """
    v_arr = np.asarray(v, dtype=np.float64)
    tau_arr = np.asarray(tau, dtype=np.float64)
    if not (np.all(np.isfinite(v_arr)) and np.all(np.isfinite(tau_arr))):
        raise ValueError("prox_weighted_abs requires finite inputs")
    if np.any(tau_arr < 0):
        raise ValueError("threshold tau must be nonnegative")
    out = np.sign(v_arr) * np.maximum(np.abs(v_arr) - tau_arr, 0.0)
    if np.isscalar(v) and np.isscalar(tau):
        return float(out)
    return out


def abs_subgrad(x: float) -> Tuple[float, float]:
    """Subgradient interval of ``|.|``: ``{-1,1}`` away from 0, ``[-1,1]`` at 0."""
    if x > 0:
        return 1.0, 1.0
    if x < 0:
        return -1.0, -1.0
    return -1.0, 1.0


def _numeric_subgrad(g: Callable[[float], float], x: float, h: float = 1e-7):
    # one-sided difference quotients, slightly widened against roundoff
    lo = (g(x) - g(x - h)) / h
    hi = (g(x + h) - g(x)) / h
    pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
    return lo - pad, hi + pad


@dataclass(frozen=True)
class ScalarProxProblem:
    """One coordinate-wise prox instance.

    ``g`` must be closed, convex and nonnegative; ``g_subgrad(x)`` returns
    its subgradient interval ``(lo, hi)`` (finite-difference fallback when
    omitted).  Defaults to the absolute value.
    """

    v: float
    tau: float
    g: Optional[Callable[[float], float]] = None
    g_subgrad: Optional[Callable[[float], Tuple[float, float]]] = None

    def subgrad(self, x: float) -> Tuple[float, float]:
        if self.g is None:
            return abs_subgrad(x)
        if self.g_subgrad is not None:
            return self.g_subgrad(x)
        return _numeric_subgrad(self.g, x)


def prox_scalar_convex(problem: ScalarProxProblem, tol: float = 1e-10) -> float:
    """Minimize ``tau*g(x) + 0.5*(x - v)^2`` by bisection.

    Works for any convex ``g`` with a computable subgradient interval, in
    particular at kinks where Newton steps are unusable.  Returns a point
    within ``tol`` of the unique minimizer.

    Raises
    ------
    ValueError
        On nonpositive ``tol``, negative ``tau`` or non-finite inputs.
    NumericalFailure
        If geometric bracket expansion fails after 64 doublings.
    """
    v = float(problem.v)
    tau = float(problem.tau)
    if not (np.isfinite(v) and np.isfinite(tau)):
        raise ValueError("prox_scalar_convex requires finite inputs")
    if tau < 0:
        raise ValueError("weight tau must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tau == 0:
        return v

    subgrad = problem.subgrad

    # psi(x) = x - v + tau*dg(x) is strongly monotone; 0 in psi(x*) at the
    # unique minimizer.  Bracket with a bound G on |dg| near v and 0.
    lo_v, hi_v = subgrad(v)
    G = max(1.0, abs(lo_v), abs(hi_v))
    a = min(v, 0.0) - tau * G
    b = max(v, 0.0) + tau * G

    def psi(x):
        lo, hi = subgrad(x)
        return x - v + tau * lo, x - v + tau * hi

    for _ in range(64):
        if psi(a)[0] <= 0.0 <= psi(b)[1]:
            break
        width = b - a
        a -= width
        b += width
    else:
        raise NumericalFailure("could not bracket the prox optimality map")

    while b - a > 2.0 * tol:
        c = 0.5 * (a + b)
        psi_lo, psi_hi = psi(c)
        if psi_hi < 0.0:
            a = c
        elif psi_lo > 0.0:
            b = c
        else:
            return c  # 0 lies in the subgradient inclusion at c
    return 0.5 * (a + b)


def block_prox_step(
    x_hat,
    grad_block,
    alpha: float,
    weights,
    g: Optional[Callable[[float], float]] = None,
    g_subgrad: Optional[Callable[[float], Tuple[float, float]]] = None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Exact solution of one block subproblem.

    Minimizes ``<grad, x> + (1/(2*alpha)) * ||x - x_hat||^2 + sum_j w_j g(x_j)``
    coordinate-wise: the prox of ``g`` with center ``x_hat_j - alpha*grad_j``
    and effective weight ``alpha * w_j``.  Uses the closed-form soft
    threshold when ``g`` is the absolute value (``g=None``) and bisection
    otherwise.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64).ravel()
    grad_block = np.asarray(grad_block, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if not (x_hat.shape == grad_block.shape == weights.shape):
        raise ValueError("x_hat, grad_block and weights must have equal length")
    if alpha <= 0:
        raise ValueError("stepsize alpha must be positive")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")

    v = x_hat - alpha * grad_block
    tau = alpha * weights
    if g is None:
        return prox_weighted_abs(v, tau)
    return np.array(
        [
            prox_scalar_convex(
                ScalarProxProblem(float(vj), float(tj), g, g_subgrad), tol=tol
            )
            for vj, tj in zip(v, tau)
        ]
    )
