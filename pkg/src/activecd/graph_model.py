"""Graphs, SBM sampling, the log-likelihood-ratio adjacency, and ingestion."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    DataWarning,
    DimensionError,
    EstimationError,
    LabelRangeError,
    MissingLabelError,
    ParameterError,
    ParseError,
)
from .simplex import DiscreteLabeling

logger = logging.getLogger(__name__)

EPS = 1e-6

__all__ = [
    "EPS",
    "Graph",
    "SbmParams",
    "GroundTruth",
    "ModifiedAdjacency",
    "sbm_sample",
    "build_modified_adjacency",
    "matvec",
    "estimate_params",
    "read_edge_list",
    "write_edge_list",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` array with ``i < j`` in every row, sorted
    lexicographically, no duplicates.
    """

    n: int
    edges: np.ndarray
    adjacency: sp.csr_matrix = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, pairs) -> "Graph":
        e = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError(f"edge endpoint outside [0, {n})")
        if np.any(e[:, 0] == e[:, 1]):
            raise ParameterError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        A = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return cls(n, e, A)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        A = self.adjacency
        return A.indices[A.indptr[i] : A.indptr[i + 1]]

    def density(self) -> float:
        pairs = self.n * (self.n - 1) / 2
        return self.num_edges / pairs if pairs else 0.0


@dataclass(frozen=True)
class SbmParams:
    n: int
    r: int
    p: float
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be positive")
        if self.r < 2:
            raise ParameterError("r must be at least 2")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or not np.isfinite(v):
                raise ParameterError(f"{name}={v} is not a probability")

    @classmethod
    def sparse(cls, n: int, r: int, a: float, b: float) -> "SbmParams":
        """SBM(n, r, a/n, b/n)."""
        return cls(n, r, a / n, b / n)

    @property
    def a(self) -> float:
        return self.p * self.n

    @property
    def b(self) -> float:
        return self.q * self.n

    @property
    def snr(self) -> float:
        # matches 9/14 at a=5, b=2, r=2; general-r form is a convention
        a, b = self.a, self.b
        return (a - b) ** 2 / (self.r * (a + b))

    def clamped(self) -> tuple[float, float]:
        return _clamp(self.p), _clamp(self.q)


@dataclass(frozen=True)
class GroundTruth:
    """Full labeling of every node; doubles as the query oracle."""

    labels: np.ndarray
    r: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1 or (lab.size and (lab.min() < 0 or lab.max() >= self.r)):
            raise LabelRangeError(f"ground-truth labels must lie in [0, {self.r})")
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def label(self, node: int) -> int:
        return int(self.labels[node])


def _clamp(x: float) -> float:
    return float(min(max(x, EPS), 1.0 - EPS))


def sbm_sample(params: SbmParams, seed: int) -> tuple[Graph, GroundTruth]:
    """Draw labels i.i.d. uniform over ``r`` and edges independently.

    Memory stays O(n + |E|): pairs are drawn one row of the upper triangle
    at a time.
    """
    rng = np.random.default_rng(seed)
    n, r = params.n, params.r
    labels = rng.integers(0, r, size=n)
    src, dst = [], []
    for i in range(n - 1):
        others = labels[i + 1 :]
        prob = np.where(others == labels[i], params.p, params.q)
        hit = np.flatnonzero(rng.random(n - i - 1) < prob)
        if hit.size:
            src.append(np.full(hit.size, i))
            dst.append(hit + i + 1)
    if src:
        e = np.column_stack([np.concatenate(src), np.concatenate(dst)])
    else:
        e = np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(n, e), GroundTruth(labels, r)


@dataclass(frozen=True)
class ModifiedAdjacency:
    """Implicit n x n matrix: ``w_in`` on edges, ``w_out`` off edges, 0 on the diagonal."""

    graph: Graph
    w_in: float
    w_out: float
    p: float
    q: float

    @property
    def n(self) -> int:
        return self.graph.n

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return matvec(self, v)

    def __matmul__(self, v):
        return matvec(self, v)

    def column(self, j: int) -> np.ndarray:
        """Column ``j`` (equal to row ``j``) as a dense vector."""
        col = np.full(self.n, self.w_out)
        col[self.graph.neighbors(j)] = self.w_in
        col[j] = 0.0
        return col

    def total(self) -> float:
        """Sum of all entries."""
        m = self.graph.num_edges
        pairs = self.n * (self.n - 1) // 2
        return 2.0 * (m * self.w_in + (pairs - m) * self.w_out)

    def to_dense(self) -> np.ndarray:
        D = np.full((self.n, self.n), self.w_out)
        e = self.graph.edges
        D[e[:, 0], e[:, 1]] = self.w_in
        D[e[:, 1], e[:, 0]] = self.w_in
        np.fill_diagonal(D, 0.0)
        return D


def build_modified_adjacency(graph: Graph, p: float, q: float) -> ModifiedAdjacency:
    p, q = _clamp(p), _clamp(q)
    if p <= q:
        warnings.warn(f"p={p} <= q={q}: disassortative or uninformative model", DataWarning, stacklevel=2)
    w_in = np.log(p / q)
    w_out = np.log((1.0 - p) / (1.0 - q))
    return ModifiedAdjacency(graph, float(w_in), float(w_out), p, q)


def matvec(M: ModifiedAdjacency, v: np.ndarray) -> np.ndarray:
    """``M @ v`` in O(|E| + n) per column without forming M.

    Uses ``M = (w_in - w_out) A + w_out (11^T - I)``. ``v`` may be a vector
    or an ``(n, d)`` matrix.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] != M.n:
        raise DimensionError(f"expected leading dimension {M.n}, got {v.shape[0]}")
    out = (M.w_in - M.w_out) * (M.graph.adjacency @ v)
    if M.w_out != 0.0:
        out += M.w_out * (v.sum(axis=0) - v)
    return out


def estimate_params(
    graph: Graph,
    labeling: DiscreteLabeling,
    fallback: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Add-one-smoothed plug-in estimate of (p, q) from labeled pairs only.

    Each probability is estimated independently when at least one pair of
    its kind exists among labeled nodes; otherwise the corresponding
    fallback value is used.
    """
    nodes = labeling.labeled_nodes
    labs = labeling.assignments[nodes]
    k = nodes.size
    counts = np.bincount(labs, minlength=labeling.r)
    pairs_in = int(np.sum(counts * (counts - 1) // 2))
    pairs_out = k * (k - 1) // 2 - pairs_in

    e = graph.edges
    mask = labeling.labeled_mask
    both = mask[e[:, 0]] & mask[e[:, 1]]
    le = e[both]
    same = labeling.assignments[le[:, 0]] == labeling.assignments[le[:, 1]]
    e_in = int(same.sum())
    e_out = int((~same).sum())

    def pick(e_cnt, pairs, idx, name):
        if pairs > 0:
            return _clamp((e_cnt + 1) / (pairs + 2))
        if fallback is None:
            raise EstimationError(f"no labeled pairs to estimate {name} and no fallback")
        return _clamp(fallback[idx])

    return pick(e_in, pairs_in, 0, "p"), pick(e_out, pairs_out, 1, "q")


def _data_lines(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def read_edge_list(path, labels_path, r: int | None = None) -> tuple[Graph, GroundTruth]:
    """Load an edge list plus a ``node,label`` CSV.

    The edge file starts with the node count, then one whitespace-separated
    pair per line. Self-loops and duplicate edges are dropped with a
    :class:`DataWarning`. If ``r`` is omitted it is ``max(label) + 1``.
    """
    path = Path(path)
    lines = _data_lines(path)
    try:
        lineno, first = next(lines)
    except StopIteration:
        raise ParseError(path, 0, "empty edge file") from None
    try:
        n = int(first)
    except ValueError:
        raise ParseError(path, lineno, f"expected node count, got {first!r}") from None
    if n < 1:
        raise ParseError(path, lineno, "node count must be positive")

    seen = set()
    pairs = []
    loops = dups = 0
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected two node ids, got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, lineno, f"non-integer node id in {line!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(path, lineno, f"node id out of range [0, {n})")
        if i == j:
            loops += 1
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            dups += 1
            continue
        seen.add(key)
        pairs.append(key)
    if loops:
        warnings.warn(f"dropped {loops} self-loop(s)", DataWarning, stacklevel=2)
    if dups:
        warnings.warn(f"dropped {dups} duplicate edge(s)", DataWarning, stacklevel=2)

    labels_path = Path(labels_path)
    labels = np.full(n, -1, dtype=np.int64)
    for lineno, line in _data_lines(labels_path):
        parts = [s.strip() for s in line.split(",")]
        if len(parts) != 2:
            raise ParseError(labels_path, lineno, f"expected 'node,label', got {line!r}")
        try:
            node, lab = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(labels_path, lineno, f"non-integer field in {line!r}") from None
        if not 0 <= node < n:
            raise ParseError(labels_path, lineno, f"node id out of range [0, {n})")
        if lab < 0 or (r is not None and lab >= r):
            raise LabelRangeError(f"{labels_path}:{lineno}: label {lab} outside [0, {r})")
        labels[node] = lab
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise MissingLabelError(f"{missing.size} node(s) without a label, first is {missing[0]}")
    if r is None:
        r = max(int(labels.max()) + 1, 2)
    logger.info("read %s: n=%d, m=%d, r=%d", path, n, len(pairs), r)
    return Graph.from_edges(n, pairs), GroundTruth(labels, r)


def write_edge_list(graph: Graph, truth: GroundTruth, path, labels_path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{graph.n}\n")
        for i, j in graph.edges:
            fh.write(f"{i} {j}\n")
    with open(labels_path, "w", newline="\n") as fh:
        for node, lab in enumerate(truth.labels):
            fh.write(f"{node},{lab}\n")
