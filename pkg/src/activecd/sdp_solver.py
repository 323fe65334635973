"""Label-constrained SDP via low-rank factorization.

Maximizes ``Tr(X^T M X)`` over ``n x d`` matrices with unit rows, with
supervised rows pinned to simplex vertices. Pinning enforces the Gram
constraints between labeled pairs exactly, so only the free rows move.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, StateError
from .graph_model import ModifiedAdjacency, matvec
from .simplex import DiscreteLabeling, SimplexBasis, canonical_simplex

logger = logging.getLogger(__name__)

__all__ = [
    "VectorLabeling",
    "SolverConfig",
    "SolveResult",
    "default_rank",
    "trace_score",
    "riemannian_gradient",
    "solve_sdp",
    "extract_solution",
]


@dataclass(frozen=True)
class VectorLabeling:
    """Unit-row matrix with some rows pinned to simplex vertices.

    ``labels[i]`` is the pinned label of row ``i`` or ``-1`` if the row is free.
    """

    rows: np.ndarray
    labels: np.ndarray
    r: int

    @property
    def pinned_mask(self) -> np.ndarray:
        return self.labels >= 0

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def labeled(self) -> DiscreteLabeling:
        return DiscreteLabeling(self.labels, self.pinned_mask, self.r)

    def labels_complete(self) -> bool:
        return np.unique(self.labels[self.pinned_mask]).size == self.r


@dataclass(frozen=True)
class SolverConfig:
    rank: int | None = None  # None -> default_rank(n, r)
    max_iters: int = 2000
    grad_tol: float | None = None  # None -> 1e-6 * n
    restarts: int = 5
    seed: int = 0
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4

    def __post_init__(self):
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")
        if not 0.0 < self.backtrack < 1.0:
            raise ParameterError("backtrack factor must lie in (0, 1)")

    def resolve_rank(self, n: int, r: int) -> int:
        d = default_rank(n, r) if self.rank is None else self.rank
        if d < r:
            raise ParameterError(f"rank {d} must be >= r={r}")
        return d

    def resolve_tol(self, n: int) -> float:
        return 1e-6 * n if self.grad_tol is None else self.grad_tol


@dataclass(frozen=True)
class SolveResult:
    X: VectorLabeling
    objective: float
    grad_norm: float
    iterations: int
    restart_index: int
    history: np.ndarray  # objective per iteration of the winning run


def default_rank(n: int, r: int) -> int:
    return max(r + 1, math.ceil(math.sqrt(2 * n)))


def trace_score(M: ModifiedAdjacency, X) -> float:
    """``Tr(X^T M X) = sum_{i != j} M_ij <X_i, X_j>`` via implicit matvecs."""
    rows = np.asarray(getattr(X, "rows", X), dtype=float)
    if rows.shape[0] != M.n:
        raise DimensionError(f"X has {rows.shape[0]} rows, M is {M.n} x {M.n}")
    return float(np.sum(rows * matvec(M, rows)))


def _tangent(G: np.ndarray, X: np.ndarray) -> np.ndarray:
    return G - np.sum(G * X, axis=1, keepdims=True) * X


def riemannian_gradient(M: ModifiedAdjacency, X: np.ndarray, free: np.ndarray | None = None) -> np.ndarray:
    """Row-wise tangent projection of ``2 M X``; zero on pinned rows."""
    G = _tangent(2.0 * matvec(M, X), X)
    if free is not None:
        G[~free] = 0.0
    return G


def _normalize(A: np.ndarray) -> np.ndarray:
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def _ascend(M, X0, free, cfg, max_iters, tol):
    """Riemannian gradient ascent with Armijo backtracking.

    Trial steps use the Barzilai-Borwein length from the previous iterate
    pair; only accepted steps change X, so the objective never decreases.
    """
    X = X0.copy()
    MX = matvec(M, X)
    f = float(np.sum(X * MX))
    G = _tangent(2.0 * MX, X)
    G[~free] = 0.0
    step = cfg.initial_step
    history = [f]
    it = 0
    while True:
        g2 = float(np.sum(G * G))
        gnorm = math.sqrt(g2)
        if gnorm <= tol or it >= max_iters:
            break
        t = step
        while True:
            Xn = X + t * G
            Xn[free] = _normalize(Xn[free])
            MXn = matvec(M, Xn)
            fn = float(np.sum(Xn * MXn))
            if fn >= f + cfg.armijo * t * g2 or t < 1e-14:
                break
            t *= cfg.backtrack
        if fn < f:
            # no ascent left at machine precision
            break
        it += 1
        Gn = _tangent(2.0 * MXn, Xn)
        Gn[~free] = 0.0
        S = Xn - X
        Y = Gn - G
        sy = abs(float(np.sum(S * Y)))
        step = float(np.sum(S * S)) / sy if sy > 0 else t * 2.0
        step = min(max(step, 1e-10), 1e6)
        X, MX, f, G = Xn, MXn, fn, Gn
        history.append(f)
    return X, f, gnorm, it, np.array(history)


def _random_sphere(rng, n, d):
    return _normalize(rng.standard_normal((n, d)))


def solve_sdp(
    M: ModifiedAdjacency,
    labeled: DiscreteLabeling,
    cfg: SolverConfig = SolverConfig(),
    warm_start: VectorLabeling | np.ndarray | None = None,
) -> SolveResult:
    """Best of ``cfg.restarts`` ascent runs from random points on the spheres.

    With a warm start it replaces the first random initialization; the
    remaining draws are identical to a cold start with the same seed.
    Pinned rows are the canonical simplex vertices in dimension ``d``.
    """
    n, r = M.n, labeled.r
    if labeled.n != n:
        raise DimensionError("labeling and graph disagree on n")
    d = cfg.resolve_rank(n, r)
    tol = cfg.resolve_tol(n)
    basis = canonical_simplex(r, d)
    pinned = labeled.labeled_mask
    free = ~pinned
    pin_rows = basis.vectors[labeled.assignments[pinned]]

    rng = np.random.default_rng(cfg.seed)
    inits = [_random_sphere(rng, n, d) for _ in range(cfg.restarts)]
    if warm_start is not None:
        W = np.array(getattr(warm_start, "rows", warm_start), dtype=float)
        if W.shape != (n, d):
            raise DimensionError(f"warm start has shape {W.shape}, expected {(n, d)}")
        inits[0] = _normalize(W)

    best = None
    for k, X0 in enumerate(inits):
        X0 = X0.copy()
        X0[pinned] = pin_rows
        X, f, gnorm, iters, hist = _ascend(M, X0, free, cfg, cfg.max_iters, tol)
        logger.debug("restart %d: objective=%.6g grad=%.3g iters=%d", k, f, gnorm, iters)
        if best is None or f > best[1]:
            best = (X, f, gnorm, iters, k, hist)
    X, f, gnorm, iters, k, hist = best
    labels = np.where(pinned, labeled.assignments, -1)
    return SolveResult(VectorLabeling(X, labels, r), f, gnorm, iters, k, hist)


def extract_solution(result: SolveResult, basis: SimplexBasis | None = None) -> VectorLabeling:
    """Vector labels ready for rounding.

    When every label has a pinned row the pins already fix the alignment
    and ``X`` is returned unchanged. Otherwise the caller must supply the
    best-fit simplex it will round against.
    """
    X = result.X
    if X.labels_complete():
        return X
    if basis is None:
        raise StateError(
            "pinned rows do not cover all labels; fit a simplex with best_fit_simplex before rounding"
        )
    if basis.dim != X.d or basis.r != X.r:
        raise DimensionError("basis does not match solution dimensions")
    return X
