"""Likelihood scores, conditional label distributions, and exhaustive oracles.

Everything is kept in log space. Absolute likelihoods are never formed;
only differences of scores and normalized distributions are exposed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DimensionError, ParameterError, SizeCapError
from .graph_model import Graph, ModifiedAdjacency, _clamp, matvec
from .sdp_solver import VectorLabeling, trace_score
from .simplex import DiscreteLabeling, SimplexBasis, canonical_simplex

MAX_COMPLETIONS = 2_000_000

__all__ = [
    "MAX_COMPLETIONS",
    "LabelDistribution",
    "RatioCertificate",
    "log_likelihood_score",
    "labeling_score",
    "conditional_distribution",
    "conditional_matrix",
    "approx_ratio_certificate",
    "enumerate_completions",
    "brute_force_ml",
    "brute_force_posterior",
    "bernoulli_log_likelihood",
]


@dataclass(frozen=True)
class LabelDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ParameterError("probs must be a nonnegative vector summing to 1")
        object.__setattr__(self, "probs", p)

    @property
    def r(self) -> int:
        return self.probs.shape[0]

    def __getitem__(self, c):
        return self.probs[c]


@dataclass(frozen=True)
class RatioCertificate:
    """Lower bound on likelihood(rounded) / likelihood(ML optimum)."""

    value: float
    disc_score: float
    relax_score: float
    r: int

    @property
    def log_value(self) -> float:
        return (self.r - 1) / (2 * self.r) * (self.disc_score - self.relax_score)


def _check_simplex_rows(rows: np.ndarray, r: int, atol: float = 1e-9) -> None:
    G = rows @ rows.T
    off = -1.0 / (r - 1)
    ok = np.isclose(G, 1.0, atol=atol) | np.isclose(G, off, atol=atol)
    if not np.all(ok) or not np.allclose(np.diag(G), 1.0, atol=atol):
        raise ParameterError("rows are not vertices of a common regular simplex")


def log_likelihood_score(M: ModifiedAdjacency, X, r: int, *, check: bool = True) -> float:
    """Unnormalized log posterior ``(r-1)/(2r) Tr(X^T M X)`` of a discrete labeling.

    ``X`` holds one simplex vertex per row.
    """
    rows = np.asarray(getattr(X, "rows", X), dtype=float)
    if check:
        _check_simplex_rows(rows, r)
    return (r - 1) / (2 * r) * trace_score(M, rows)


def labeling_score(M: ModifiedAdjacency, labels, r: int) -> float:
    """:func:`log_likelihood_score` for an integer label vector."""
    labels = np.asarray(getattr(labels, "assignments", labels))
    return log_likelihood_score(M, canonical_simplex(r).embed(labels), r, check=False)


def conditional_matrix(M: ModifiedAdjacency, rows: np.ndarray, basis: SimplexBasis, MX: np.ndarray | None = None) -> np.ndarray:
    """Row ``i`` is the label distribution of node ``i`` given every other row.

    Because the diagonal of M is zero, ``(M X)_i`` already excludes node
    ``i``'s own row, so one product serves all nodes.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.shape[1] != basis.dim:
        raise DimensionError(f"rows have dim {rows.shape[1]}, basis has dim {basis.dim}")
    if MX is None:
        MX = matvec(M, rows)
    r = basis.r
    logits = (r - 1) / r * (MX @ basis.vectors.T)
    return softmax(logits, axis=1)


def conditional_distribution(M: ModifiedAdjacency, i: int, rows, basis: SimplexBasis) -> LabelDistribution:
    """Distribution of node ``i``'s label conditioned on all other rows.

    With discrete rows this is the exact conditional posterior; with
    relaxed SDP rows it is the vector-conditioned generalization. Row ``i``
    of ``rows`` is ignored.
    """
    rows = np.asarray(getattr(rows, "rows", rows), dtype=float)
    if rows.shape != (M.n, basis.dim):
        raise DimensionError(f"rows must have shape {(M.n, basis.dim)}, got {rows.shape}")
    m_i = M.column(i)
    r = basis.r
    logits = (r - 1) / r * (m_i @ rows @ basis.vectors.T)
    return LabelDistribution(softmax(logits))


def approx_ratio_certificate(
    M: ModifiedAdjacency,
    rounded: DiscreteLabeling,
    relaxed: VectorLabeling,
) -> RatioCertificate:
    """Computable lower bound on how close the rounded labeling is to the ML optimum."""
    r = relaxed.r
    if rounded.r != r or rounded.n != relaxed.n:
        raise DimensionError("rounded and relaxed labelings differ in shape")
    pins = relaxed.pinned_mask
    if not np.array_equal(rounded.labeled_mask, pins) or not np.array_equal(
        rounded.assignments[pins], relaxed.labels[pins]
    ):
        raise ParameterError("rounded and relaxed labelings use different labeled sets")
    disc = trace_score(M, canonical_simplex(r).embed(rounded.assignments))
    relax = trace_score(M, relaxed.rows)
    value = float(np.exp((r - 1) / (2 * r) * (disc - relax)))
    return RatioCertificate(value, disc, relax, r)


# exhaustive oracles ---------------------------------------------------------


def _free_and_fixed(labeled: DiscreteLabeling | None, n: int, r: int):
    if labeled is None:
        labeled = DiscreteLabeling.unlabeled(n, r)
    free = labeled.unlabeled_nodes
    if float(r) ** free.size > MAX_COMPLETIONS:
        raise SizeCapError(f"r^(n-k) = {r}^{free.size} exceeds the cap of {MAX_COMPLETIONS}")
    return labeled, free


def enumerate_completions(labeled: DiscreteLabeling, chunk: int = 65536):
    """Yield ``(batch, n)`` integer arrays of every completion, lexicographic order.

    Free nodes are taken in ascending index order; the first free node is
    the most significant digit.
    """
    r = labeled.r
    free = labeled.unlabeled_nodes
    total = r ** free.size
    base = np.where(labeled.labeled_mask, labeled.assignments, 0)
    weights = r ** np.arange(free.size - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        batch = np.tile(base, (idx.size, 1))
        if free.size:
            batch[:, free] = (idx[:, None] // weights[None, :]) % r
        yield batch


def _dense_scores(D: np.ndarray, batch: np.ndarray, r: int) -> np.ndarray:
    """``Tr(X^T M X)`` for each labeling in ``batch`` using a dense M.

    Inner products of simplex vertices are ``-1/(r-1) + r/(r-1) [same]``.
    """
    onehot = np.eye(r)[batch]  # (B, n, r)
    same = np.einsum("bic,ij,bjc->b", onehot, D, onehot)
    return (r * same - D.sum()) / (r - 1)


def brute_force_ml(M: ModifiedAdjacency, labeled: DiscreteLabeling | None, r: int) -> DiscreteLabeling:
    """Exhaustive maximizer of the trace score over all completions.

    Ties within a 1e-12 relative band go to the lexicographically smallest
    completion.
    """
    labeled, _ = _free_and_fixed(labeled, M.n, r)
    D = M.to_dense()
    best_score, best = -np.inf, None
    for batch in enumerate_completions(labeled):
        scores = _dense_scores(D, batch, r)
        top = scores.max()
        if best is None or top > best_score + 1e-12 * (1.0 + abs(best_score)):
            k = int(np.flatnonzero(scores >= top - 1e-12 * (1.0 + abs(top)))[0])
            best_score, best = top, batch[k].copy()
    return DiscreteLabeling(best, labeled.labeled_mask.copy(), r)


def bernoulli_log_likelihood(graph: Graph, p: float, q: float, labels: np.ndarray) -> np.ndarray:
    """``log P[graph | labels]`` under SBM edge probabilities, one value per row of ``labels``.

    Counts within/between-community edges and pairs directly; does not use
    the modified adjacency.
    """
    labels = np.atleast_2d(labels)
    n = graph.n
    r = int(labels.max()) + 1
    counts = np.stack([np.sum(labels == c, axis=1) for c in range(r)], axis=1)
    pairs_in = np.sum(counts * (counts - 1) // 2, axis=1)
    pairs_out = n * (n - 1) // 2 - pairs_in
    e = graph.edges
    if e.size:
        e_in = np.sum(labels[:, e[:, 0]] == labels[:, e[:, 1]], axis=1)
    else:
        e_in = np.zeros(labels.shape[0], dtype=np.int64)
    e_out = graph.num_edges - e_in
    p, q = _clamp(p), _clamp(q)
    return (
        e_in * np.log(p)
        + (pairs_in - e_in) * np.log1p(-p)
        + e_out * np.log(q)
        + (pairs_out - e_out) * np.log1p(-q)
    )


def brute_force_posterior(
    graph: Graph, p: float, q: float, labeled: DiscreteLabeling | None, i: int, r: int
) -> LabelDistribution:
    """Exact marginal ``P[X_i = c | graph, X_L]`` summed over all completions."""
    labeled, _ = _free_and_fixed(labeled, graph.n, r)
    if labeled.labeled_mask[i]:
        probs = np.zeros(r)
        probs[labeled.assignments[i]] = 1.0
        return LabelDistribution(probs)
    acc = np.full(r, -np.inf)
    for batch in enumerate_completions(labeled):
        ll = bernoulli_log_likelihood(graph, p, q, batch)
        for c in range(r):
            sel = batch[:, i] == c
            if sel.any():
                acc[c] = np.logaddexp(acc[c], logsumexp(ll[sel]))
    return LabelDistribution(np.exp(acc - logsumexp(acc)))
