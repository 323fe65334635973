"""Simplex label alphabet, rounding, and best-fit simplex alignment.

Labels over ``r`` communities are encoded as the vertices of a regular
simplex: ``r`` unit vectors whose pairwise inner products all equal
``-1/(r-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionError, ParameterError

__all__ = [
    "SimplexBasis",
    "DiscreteLabeling",
    "canonical_simplex",
    "round_labeling",
    "spherical_kmeans",
    "procrustes_align",
    "best_fit_simplex",
    "match_vertices_to_labels",
]


@dataclass(frozen=True)
class SimplexBasis:
    """``r`` unit vectors in ``dim`` dimensions; row ``c`` encodes label ``c``."""

    vectors: np.ndarray

    @property
    def r(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def embed(self, labels: np.ndarray) -> np.ndarray:
        """Rows of vectors for an integer label array."""
        return self.vectors[np.asarray(labels, dtype=int)]


@dataclass(frozen=True)
class DiscreteLabeling:
    """Integer labels in ``[0, r)`` plus a mask of supervised nodes.

    Partial labelings (only supervised nodes known) carry ``-1`` for
    unknown entries.
    """

    assignments: np.ndarray
    labeled_mask: np.ndarray
    r: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        m = np.asarray(self.labeled_mask, dtype=bool)
        if a.shape != m.shape or a.ndim != 1:
            raise DimensionError("assignments and labeled_mask must be equal-length 1-D arrays")
        if self.r < 2:
            raise ParameterError("r must be at least 2")
        known = a[a >= 0]
        if known.size and known.max() >= self.r:
            raise ParameterError(f"label index out of range for r={self.r}")
        if np.any(a[m] < 0):
            raise ParameterError("labeled nodes must carry a label")
        object.__setattr__(self, "assignments", a)
        object.__setattr__(self, "labeled_mask", m)

    @classmethod
    def partial(cls, n: int, r: int, known: Mapping[int, int]) -> "DiscreteLabeling":
        a = np.full(n, -1, dtype=np.int64)
        m = np.zeros(n, dtype=bool)
        for node, lab in known.items():
            a[node] = lab
            m[node] = True
        return cls(a, m, r)

    @classmethod
    def unlabeled(cls, n: int, r: int) -> "DiscreteLabeling":
        return cls.partial(n, r, {})

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    @property
    def labeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.labeled_mask)

    @property
    def unlabeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.labeled_mask)

    def labels_seen(self) -> np.ndarray:
        return np.unique(self.assignments[self.labeled_mask])

    def is_complete(self) -> bool:
        """True when every one of the ``r`` labels has a supervised node."""
        return self.labels_seen().size == self.r

    def with_label(self, node: int, label: int) -> "DiscreteLabeling":
        a = self.assignments.copy()
        m = self.labeled_mask.copy()
        a[node] = label
        m[node] = True
        return DiscreteLabeling(a, m, self.r)


def canonical_simplex(r: int, dim: int | None = None) -> SimplexBasis:
    """Regular simplex in the first ``r-1`` coordinates, zero-padded to ``dim``.

    Built by projecting the standard basis of R^r onto the plane orthogonal
    to the all-ones vector, expressed in Helmert coordinates.
    """
    if r < 2:
        raise ParameterError("r must be at least 2")
    if dim is None:
        dim = r - 1
    if dim < r - 1:
        raise DimensionError(f"dim={dim} cannot hold a simplex with r={r} (needs {r - 1})")
    # Helmert basis of the sum-zero subspace: column k is
    # (1,...,1,-k,0,...,0)/sqrt(k(k+1)) with k leading ones.
    H = np.zeros((r, r - 1))
    for k in range(1, r):
        H[:k, k - 1] = 1.0
        H[k, k - 1] = -k
        H[:, k - 1] /= np.sqrt(k * (k + 1))
    # e_c - 1/r, normalized, has length sqrt((r-1)/r)
    V = H * np.sqrt(r / (r - 1))
    out = np.zeros((r, dim))
    out[:, : r - 1] = V
    return SimplexBasis(out)


def round_labeling(X, basis: SimplexBasis, labeled: DiscreteLabeling | None = None) -> DiscreteLabeling:
    """Snap each row to the basis vector of largest inner product.

    ``X`` is an ``(n, d)`` array or anything with a ``rows`` attribute.
    Supervised nodes in ``labeled`` keep their labels. Ties go to the lowest
    label index.
    """
    rows = np.asarray(getattr(X, "rows", X))
    if rows.ndim != 2 or rows.shape[1] != basis.dim:
        raise DimensionError(f"rows have dim {rows.shape[-1]}, basis has dim {basis.dim}")
    scores = rows @ basis.vectors.T
    assignments = np.argmax(scores, axis=1).astype(np.int64)
    if labeled is None:
        return DiscreteLabeling(assignments, np.zeros(rows.shape[0], dtype=bool), basis.r)
    if labeled.n != rows.shape[0]:
        raise DimensionError("labeling and rows disagree on n")
    mask = labeled.labeled_mask
    assignments[mask] = labeled.assignments[mask]
    return DiscreteLabeling(assignments, mask.copy(), basis.r)


def _normalize_rows(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return A / norms


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    for _ in range(1, k):
        # cosine distance 1 - <x, c>, squared for D^2 weighting
        sims = X @ np.array(centers).T
        d2 = np.clip(1.0 - sims.max(axis=1), 0.0, None) ** 2
        total = d2.sum()
        if total <= 0:
            centers.append(X[rng.integers(n)])
        else:
            centers.append(X[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def spherical_kmeans(
    X: np.ndarray,
    k: int,
    *,
    restarts: int = 20,
    max_iter: int = 100,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Cosine k-means on unit vectors.

    Centroids are renormalized to unit length every iteration, seeding is
    k-means++ on cosine distance, and the best of ``restarts`` runs by total
    within-cluster cosine similarity is returned.

    Returns:
        (centroids of shape (k, d), assignments of shape (n,))
    """
    X = _normalize_rows(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < k:
        raise ParameterError(f"need at least {k} rows, got {n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        C = _kmeanspp_init(X, k, rng)
        assign = None
        for _ in range(max_iter):
            new_assign = np.argmax(X @ C.T, axis=1)
            if assign is not None and np.array_equal(new_assign, assign):
                break
            assign = new_assign
            for j in range(k):
                members = X[assign == j]
                if members.shape[0] == 0:
                    # empty cluster: re-seed at the worst-fit point
                    worst = np.argmin(np.sum(X * C[assign], axis=1))
                    C[j] = X[worst]
                    assign[worst] = j
                else:
                    s = members.sum(axis=0)
                    norm = np.linalg.norm(s)
                    C[j] = s / norm if norm > 0 else members[0]
        score = np.sum(X * C[assign], axis=1).sum()
        if best is None or score > best[0] + 1e-12:
            best = (score, C.copy(), assign.copy())
    return best[1], best[2]


def procrustes_align(V: np.ndarray) -> SimplexBasis:
    """Regular simplex maximizing ``sum_i <simplex_i, V_i>``.

    The feasible simplices are exactly the orthogonal images of the
    canonical one, so this is an orthogonal Procrustes problem: with
    ``K = C^T V = U S W^T`` the optimal rotation is ``U W^T``.
    """
    V = np.asarray(V, dtype=float)
    r, d = V.shape
    if d < r - 1:
        raise DimensionError(f"vectors of dim {d} cannot host a simplex with r={r}")
    C = canonical_simplex(r, d).vectors
    U, _, Wt = np.linalg.svd(C.T @ V)
    return SimplexBasis(C @ (U @ Wt))


def best_fit_simplex(X, r: int, *, restarts: int = 20, seed: int = 0) -> SimplexBasis:
    """Fit a regular simplex to a cloud of unit vectors.

    Runs spherical k-means with ``r`` clusters, then aligns a regular
    simplex to the centroids. Vertex ``j`` of the result pairs with k-means
    cluster ``j``; use :func:`match_vertices_to_labels` to attach label
    identities.
    """
    rows = np.asarray(getattr(X, "rows", X), dtype=float)
    if rows.shape[0] < r:
        raise ParameterError(f"best-fit simplex needs at least r={r} rows, got {rows.shape[0]}")
    centroids, _ = spherical_kmeans(rows, r, restarts=restarts, seed=seed)
    return procrustes_align(centroids)


def match_vertices_to_labels(
    fitted: SimplexBasis, reference: SimplexBasis, seen=None
) -> SimplexBasis:
    """Reorder fitted vertices so row ``c`` is the one closest to reference label ``c``.

    Optimal one-to-one matching on inner products (Hungarian method). If
    ``seen`` lists the labels that actually have supervised nodes, only those
    drive the matching; the rest are filled in by a tiny-weight tiebreak.
    """
    if fitted.dim != reference.dim or fitted.r != reference.r:
        raise DimensionError("fitted and reference simplices differ in shape")
    sim = reference.vectors @ fitted.vectors.T
    if seen is not None:
        weight = np.full(fitted.r, 1e-6)
        weight[np.asarray(seen, dtype=int)] = 1.0
        sim = sim * weight[:, None]
    rows, cols = linear_sum_assignment(-sim)
    order = np.empty(fitted.r, dtype=int)
    order[rows] = cols
    return SimplexBasis(fitted.vectors[order])
