"""Problem model: block partitions, smooth losses, and separable penalties.

The solvers in this package minimize

    F(x) = f(x) + lam * sum_j h(g(x_j)),

where ``f`` is a smooth loss with a Lipschitz-continuous gradient on each
block of coordinates, ``g`` is a scalar nonnegative convex map (absolute
value unless stated otherwise) and ``h`` is a concave increasing map with
``h'(t) > 0``.  All index sets are 0-based; a block partition splits
``{0, ..., n-1}`` into disjoint nonempty groups that are updated one at a
time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "BlockPartition",
    "PartitionReport",
    "validate_partition",
    "LeastSquares",
    "MatrixLeastSquares",
    "LogPenalty",
    "SmoothedLp",
    "CustomPenalty",
    "Problem",
    "eval_objective",
    "block_gradient",
    "block_lipschitz",
    "spectral_norm_sq",
]

# Floor applied to estimated block curvature constants so that stepsizes
# 1/(gamma*L) stay finite for degenerate (all-zero) submatrices.
LIPSCHITZ_FLOOR = 1e-12
# Safety factor compensating for power iteration converging from below.
LIPSCHITZ_SAFETY = 1.01


# ---------------------------------------------------------------------------
# block partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Ordered disjoint index blocks covering ``{0, ..., n-1}``.

    Parameters
    ----------
    blocks : tuple of int arrays
        One array of coordinate indices per block, 0-based.
    n : int
        Total number of coordinates.
    """

    blocks: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(
            self,
            "blocks",
            tuple(np.asarray(b, dtype=np.intp).ravel() for b in self.blocks),
        )

    @property
    def m(self) -> int:
        """Number of blocks."""
        return len(self.blocks)

    @staticmethod
    def single(n: int) -> "BlockPartition":
        """The trivial partition with one block covering everything."""
        return BlockPartition(blocks=(np.arange(n),), n=n)

    @staticmethod
    def contiguous(n: int, m: int) -> "BlockPartition":
        """Split ``{0..n-1}`` into ``m`` contiguous ranges whose sizes differ by at most 1."""
        if not (1 <= m <= n):
            raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
        bounds = np.linspace(0, n, m + 1).round().astype(np.intp)
        blocks = tuple(np.arange(bounds[i], bounds[i + 1]) for i in range(m))
        return BlockPartition(blocks=blocks, n=n)


@dataclass(frozen=True)
class PartitionReport:
    """Outcome of :func:`validate_partition`; ``index`` is the first offender."""

    ok: bool
    message: Optional[str] = None
    index: Optional[int] = None


def validate_partition(partition: BlockPartition) -> PartitionReport:
    """Check disjointness and exact coverage of a block partition.

    Returns an ``ok`` report when the blocks are nonempty, pairwise
    disjoint and their union is ``{0, ..., n-1}``; otherwise the report
    names the first offending index.
    """
    n = partition.n
    if partition.m < 1:
        return PartitionReport(False, "partition has no blocks", None)
    seen = np.zeros(n, dtype=bool)
    for bi, block in enumerate(partition.blocks):
        if block.size == 0:
            return PartitionReport(False, f"block {bi} is empty", None)
        for j in block:
            j = int(j)
            if j < 0 or j >= n:
                return PartitionReport(
                    False, f"index {j} outside range 0..{n - 1}", j
                )
            if seen[j]:
                return PartitionReport(False, f"index {j} duplicated", j)
            seen[j] = True
    if not seen.all():
        j = int(np.flatnonzero(~seen)[0])
        return PartitionReport(False, f"index {j} uncovered", j)
    return PartitionReport(True)


# ---------------------------------------------------------------------------
# spectral norm estimation
# ---------------------------------------------------------------------------


def spectral_norm_sq(M: np.ndarray, tol: float = 1e-8, max_iter: int = 500) -> float:
    """Squared spectral norm of ``M`` by power iteration on ``M^T M``.

    Deterministic (fixed seeded start vector).  Converges from below, so
    callers that need an upper bound should apply a safety factor.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    k = M.shape[1]
    v = np.random.default_rng(0).standard_normal(k)
    nv = np.linalg.norm(v)
    if nv == 0.0:  # cannot happen with a Gaussian draw; keep the guard anyway
        v = np.ones(k)
        nv = np.sqrt(k)
    v /= nv
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        u = M.T @ w
        lam_new = float(v @ u)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            return lam_new
        lam = lam_new
    return lam


# ---------------------------------------------------------------------------
# smooth losses
# ---------------------------------------------------------------------------


class _VectorBlockPlan:
    """Cached column submatrix for fast block updates of a least-squares loss."""

    def __init__(self, A_sub: np.ndarray):
        self.A_sub = A_sub
        self._lipschitz = None

    def grad_from_residual(self, r):
        return self.A_sub.T @ r

    def residual_after_delta(self, r, delta):
        return r + self.A_sub @ delta

    @property
    def lipschitz(self) -> float:
        if self._lipschitz is None:
            est = spectral_norm_sq(self.A_sub) * LIPSCHITZ_SAFETY
            self._lipschitz = max(est, LIPSCHITZ_FLOOR)
        return self._lipschitz


class LeastSquares:
    """Smooth loss ``f(x) = 0.5 * ||A x - b||^2``.

    ``A`` has shape ``(n_obs, dim)`` and ``b`` length ``n_obs``; the
    optimization variable lives in ``R^dim``.  Block gradients are the rows
    of ``A^T (A x - b)`` restricted to the block, and block curvature
    constants are squared spectral norms of column submatrices.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.asarray(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64).ravel()
        if A.ndim != 2:
            raise ValueError("A must be a 2-d matrix")
        if b.shape[0] != A.shape[0]:
            raise ValueError(
                f"b has length {b.shape[0]}, expected {A.shape[0]} rows of A"
            )
        self.A = A
        self.b = b

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def value(self, x) -> float:
        r = self.residual(x)
        return 0.5 * float(r @ r)

    def residual(self, x) -> np.ndarray:
        x = self._check_x(x)
        return self.A @ x - self.b

    def value_from_residual(self, r) -> float:
        return 0.5 * float(np.vdot(r, r).real)

    def grad(self, x) -> np.ndarray:
        return self.A.T @ self.residual(x)

    def grad_from_residual(self, r) -> np.ndarray:
        return self.A.T @ r

    def block_grad(self, x, idx) -> np.ndarray:
        idx = _check_block_indices(idx, self.dim)
        return self.A[:, idx].T @ self.residual(x)

    def block_plan(self, idx) -> _VectorBlockPlan:
        idx = _check_block_indices(idx, self.dim)
        return _VectorBlockPlan(np.ascontiguousarray(self.A[:, idx]))

    def block_lipschitz(self, idx) -> float:
        return self.block_plan(idx).lipschitz

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"x has length {x.shape[0]}, expected {self.dim}")
        return x


class _MatrixBlockPlan:
    """Per-column submatrices of a flattened matrix least-squares block.

    A block of flattened (column-major) indices touches one or more matrix
    columns; each group acts through ``A[:, rows]`` on a single residual
    column, so the block Hessian is block diagonal across groups.
    """

    def __init__(self, groups):
        # groups: list of (matrix column, positions inside the block, A[:, rows])
        self.groups = groups
        self._lipschitz = None

    def grad_from_residual(self, r):
        out = np.empty(sum(pos.size for _, pos, _ in self.groups))
        for col, pos, A_sub in self.groups:
            out[pos] = A_sub.T @ r[:, col]
        return out

    def residual_after_delta(self, r, delta):
        r = r.copy()
        for col, pos, A_sub in self.groups:
            r[:, col] += A_sub @ delta[pos]
        return r

    @property
    def lipschitz(self) -> float:
        if self._lipschitz is None:
            est = max(spectral_norm_sq(A_sub) for _, _, A_sub in self.groups)
            self._lipschitz = max(est * LIPSCHITZ_SAFETY, LIPSCHITZ_FLOOR)
        return self._lipschitz


class MatrixLeastSquares:
    """Smooth loss ``f(X) = 0.5 * ||A X - B||_F^2`` over a flattened variable.

    ``X`` (shape ``(q, t)``) is handled as a length ``q*t`` vector in
    column-major order, so existing vector solvers apply unchanged and
    blocks are plain index sets over the flattened coordinates.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray):
        A = np.asarray(A, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        if A.ndim != 2 or B.ndim != 2:
            raise ValueError("A and B must be 2-d matrices")
        if A.shape[0] != B.shape[0]:
            raise ValueError(
                f"A has {A.shape[0]} rows but B has {B.shape[0]} rows"
            )
        self.A = A
        self.B = B
        self.q = A.shape[1]
        self.t = B.shape[1]

    @property
    def dim(self) -> int:
        return self.q * self.t

    def _as_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"x has length {x.shape[0]}, expected {self.dim}")
        return x.reshape(self.q, self.t, order="F")

    def value(self, x) -> float:
        r = self.residual(x)
        return 0.5 * float(np.sum(r * r))

    def residual(self, x) -> np.ndarray:
        return self.A @ self._as_matrix(x) - self.B

    def value_from_residual(self, r) -> float:
        return 0.5 * float(np.sum(r * r))

    def grad(self, x) -> np.ndarray:
        return (self.A.T @ self.residual(x)).ravel(order="F")

    def grad_from_residual(self, r) -> np.ndarray:
        return (self.A.T @ r).ravel(order="F")

    def block_grad(self, x, idx) -> np.ndarray:
        return self.block_plan(idx).grad_from_residual(self.residual(x))

    def block_plan(self, idx) -> _MatrixBlockPlan:
        idx = _check_block_indices(idx, self.dim)
        cols = idx // self.q
        rows = idx % self.q
        groups = []
        for col in np.unique(cols):
            pos = np.flatnonzero(cols == col)
            # canonicalize by row so full-column groups share A itself
            order = np.argsort(rows[pos])
            pos = pos[order]
            block_rows = rows[pos]
            if block_rows.size == self.q:
                A_sub = self.A
            else:
                A_sub = np.ascontiguousarray(self.A[:, block_rows])
            groups.append((int(col), pos, A_sub))
        return _MatrixBlockPlan(groups)

    def block_lipschitz(self, idx) -> float:
        return self.block_plan(idx).lipschitz


def _check_block_indices(idx, dim: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.intp).ravel()
    if idx.size == 0:
        raise ValueError("block is empty")
    if idx.min() < 0 or idx.max() >= dim:
        raise ValueError(f"block indices must lie in 0..{dim - 1}")
    if np.unique(idx).size != idx.size:
        raise ValueError("block contains duplicate indices")
    return idx


# ---------------------------------------------------------------------------
# penalties
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogPenalty:
    """Log penalty ``h(t) = log(t + eps_bar) - log(eps_bar)`` with ``g = |.|``.

    The ``- log(eps_bar)`` shift anchors ``h(0) = 0`` so the objective at
    the origin is exactly the data-fit term; it does not alter iterates.
    """

    lam: float
    eps_bar: float
    g_is_abs = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.eps_bar <= 0:
            raise ValueError("eps_bar must be positive")

    def h(self, t):
        return np.log(np.asarray(t) + self.eps_bar) - np.log(self.eps_bar)

    def h_prime(self, t):
        return 1.0 / (np.asarray(t) + self.eps_bar)

    def weights(self, x) -> np.ndarray:
        """Majorization weights ``lam * h'(|x_j|)`` at the current point."""
        return self.lam / (np.abs(x) + self.eps_bar)

    def value(self, x) -> float:
        return self.lam * float(np.sum(self.h(np.abs(x))))


@dataclass(frozen=True)
class SmoothedLp:
    """Smoothed lp penalty ``h(t; e) = (t + e^2)^p`` with ``g = |.|``, 0 < p < 1.

    The per-coordinate smoothing factors ``e`` live in the solver state,
    not here, and shrink by ``sqrt(mu)`` whenever the coordinate lands on a
    nonzero value.
    """

    lam: float
    p: float
    g_is_abs = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")

    def h(self, t, eps):
        return (np.asarray(t) + np.asarray(eps) ** 2) ** self.p

    def h_prime(self, t, eps):
        return self.p * (np.asarray(t) + np.asarray(eps) ** 2) ** (self.p - 1.0)

    def weights(self, x, eps) -> np.ndarray:
        """Majorization weights ``lam * p * (|x_j| + eps_j^2)^(p-1)``."""
        eps = np.asarray(eps, dtype=np.float64)
        if np.any(eps <= 0):
            raise ValueError("smoothing factors must stay positive")
        return self.lam * self.p * (np.abs(x) + eps**2) ** (self.p - 1.0)

    def value(self, x, eps) -> float:
        return self.lam * float(np.sum((np.abs(x) + np.asarray(eps) ** 2) ** self.p))

    @staticmethod
    def decay_epsilon(x_new, eps, mu: float) -> np.ndarray:
        """Keep eps where the new coordinate is 0, shrink by sqrt(mu) elsewhere."""
        if not 0.0 < mu < 1.0:
            raise ValueError("mu must lie in (0, 1)")
        x_new = np.asarray(x_new)
        eps = np.asarray(eps, dtype=np.float64)
        return np.where(x_new == 0.0, eps, np.sqrt(mu) * eps)


@dataclass(frozen=True)
class CustomPenalty:
    """User-supplied scalar pair ``(h, g)`` with derivative ``h'``.

    ``g`` defaults to the absolute value.  When a different convex ``g`` is
    supplied, ``g_subgrad(x) -> (lo, hi)`` should return its subgradient
    interval; a symmetric finite-difference fallback is used otherwise and
    the proximal subproblems are solved by bisection.
    """

    lam: float
    h: Callable[[float], float]
    h_prime: Callable[[float], float]
    g: Optional[Callable[[float], float]] = None
    g_subgrad: Optional[Callable[[float], tuple]] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")

    @property
    def g_is_abs(self) -> bool:
        return self.g is None

    def _g(self, u):
        return abs(u) if self.g is None else self.g(u)

    def weights(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.array([self.lam * self.h_prime(self._g(float(u))) for u in x])

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return self.lam * float(sum(self.h(self._g(float(u))) for u in x))


# ---------------------------------------------------------------------------
# assembled problems and the public operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Problem:
    """Immutable bundle of loss, penalty and block partition.

    Safe to share across concurrent solver runs; all solver operations
    treat it as read-only.
    """

    loss: object
    penalty: object
    partition: BlockPartition

    def __post_init__(self):
        report = validate_partition(self.partition)
        if not report.ok:
            raise ValueError(f"invalid partition: {report.message}")
        if self.partition.n != self.loss.dim:
            raise ValueError(
                f"partition covers {self.partition.n} coordinates but the "
                f"loss has dimension {self.loss.dim}"
            )

    @property
    def smoothed_lp(self) -> bool:
        return isinstance(self.penalty, SmoothedLp)


def penalty_value(penalty, x, eps=None) -> float:
    """Penalty part of the objective, dispatching on the penalty variant."""
    if isinstance(penalty, SmoothedLp):
        if eps is None:
            raise ValueError("SmoothedLp penalty requires smoothing factors")
        return penalty.value(x, eps)
    if eps is not None:
        raise ValueError("smoothing factors only apply to the SmoothedLp penalty")
    return penalty.value(x)


def penalty_weights(penalty, x, eps=None) -> np.ndarray:
    """Majorization weights ``lam * h'(g(x_j))`` for every coordinate of x."""
    if isinstance(penalty, SmoothedLp):
        if eps is None:
            raise ValueError("SmoothedLp penalty requires smoothing factors")
        return penalty.weights(x, eps)
    return penalty.weights(x)


def eval_objective(loss, penalty, x, eps=None) -> float:
    """Full objective ``f(x) + lam * sum_j h(g(x_j))``.

    For the SmoothedLp penalty the smoothing vector ``eps`` is required and
    the penalty reads ``lam * sum_j (|x_j| + eps_j^2)^p``.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != loss.dim:
        raise ValueError(f"x has length {x.shape[0]}, expected {loss.dim}")
    if eps is not None and np.asarray(eps).ravel().shape[0] != x.shape[0]:
        raise ValueError("eps must have the same length as x")
    return loss.value(x) + penalty_value(penalty, x, eps)


def block_gradient(loss, x, block) -> np.ndarray:
    """Gradient of the smooth loss restricted to one block of coordinates."""
    return loss.block_grad(x, block)


def block_lipschitz(loss, block) -> float:
    """Upper bound on the block gradient Lipschitz constant.

    For least-squares losses this is the squared spectral norm of the
    column submatrix (power iteration, tol 1e-8, at most 500 iterations)
    times a 1.01 safety factor, floored at 1e-12 for zero submatrices.
    """
    return loss.block_lipschitz(block)
