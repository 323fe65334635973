"""Semi-supervised relax-and-round, and active query selection.

The active learner alternates: solve the constrained relaxation, fit or
read off the simplex, then query either an anchor node (while some
community has no supervised node) or the node of maximum expected model
change.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import softmax

from .errors import DimensionError, ParameterError, StateError
from .graph_model import Graph, GroundTruth, ModifiedAdjacency, build_modified_adjacency, estimate_params, matvec
from .likelihood import conditional_matrix
from .sdp_solver import SolveResult, SolverConfig, VectorLabeling, extract_solution, solve_sdp
from .simplex import (
    DiscreteLabeling,
    SimplexBasis,
    best_fit_simplex,
    canonical_simplex,
    match_vertices_to_labels,
    round_labeling,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ActiveConfig",
    "Relaxation",
    "ModelMatrix",
    "QueryRecord",
    "QueryLog",
    "relax",
    "semi_supervised",
    "model_phi",
    "memc_scores",
    "memc_select",
    "anchor_select",
    "active_loop",
    "random_baseline_loop",
    "accuracy",
]

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ActiveConfig:
    solver: SolverConfig = SolverConfig()
    mode: str = "rank1"  # "rank1" or "exact"
    expectation: str = "relaxed"  # "relaxed" (SDP rows) or "discrete" (rounded rows)
    warm_restarts: int = 1  # restarts for solves that have a warm start
    simplex_restarts: int = 20
    estimate: bool = False  # re-estimate p, q from the labeled set each round

    def __post_init__(self):
        if self.mode not in ("rank1", "exact"):
            raise ParameterError(f"unknown MEMC mode {self.mode!r}")
        if self.expectation not in ("relaxed", "discrete"):
            raise ParameterError(f"unknown expectation {self.expectation!r}")
        if self.warm_restarts < 1:
            raise ParameterError("warm_restarts must be >= 1")


@dataclass(frozen=True)
class Relaxation:
    """SDP output plus the simplex to round against (row ``c`` is label ``c``)."""

    result: SolveResult
    basis: SimplexBasis

    @property
    def X(self) -> VectorLabeling:
        return self.result.X


@dataclass(frozen=True)
class ModelMatrix:
    """``n x r`` row-stochastic matrix of per-node label distributions."""

    probs: np.ndarray

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def r(self) -> int:
        return self.probs.shape[1]

    def change(self, other: "ModelMatrix") -> float:
        """Entrywise L1 distance (twice the summed total variation)."""
        return float(np.abs(other.probs - self.probs).sum())


@dataclass(frozen=True)
class QueryRecord:
    step: int
    node: int
    label: int
    rule: str  # "anchor", "memc" or "random"
    score: float


@dataclass
class QueryLog:
    records: list = field(default_factory=list)
    # number of queried nodes -> predicted assignments at that point
    history: dict = field(default_factory=dict)

    def append(self, record: QueryRecord) -> None:
        if record.node in self.nodes():
            raise StateError(f"node {record.node} queried twice")
        self.records.append(record)

    def nodes(self) -> list:
        return [rec.node for rec in self.records]

    def rules(self) -> list:
        return [rec.rule for rec in self.records]

    def __len__(self):
        return len(self.records)


def _argmax_lowest(scores: np.ndarray) -> int:
    top = scores.max()
    return int(np.flatnonzero(scores >= top - _TIE_RTOL * (1.0 + abs(top)))[0])


def _solver_cfg(cfg: ActiveConfig, warm) -> SolverConfig:
    if warm is None:
        return cfg.solver
    return replace(cfg.solver, restarts=cfg.warm_restarts)


def relax(
    M: ModifiedAdjacency,
    labeled: DiscreteLabeling,
    cfg: ActiveConfig = ActiveConfig(),
    warm_start=None,
) -> Relaxation:
    """Solve the relaxation and pick the rounding simplex.

    With all labels supervised the pinned canonical vertices are the
    simplex. Otherwise a simplex is fitted to the SDP rows and its vertices
    are matched to the labels that do have supervised nodes.
    """
    res = solve_sdp(M, labeled, _solver_cfg(cfg, warm_start), warm_start)
    canon = canonical_simplex(labeled.r, res.X.d)
    if labeled.is_complete():
        basis = canon
    else:
        fitted = best_fit_simplex(res.X.rows, labeled.r, restarts=cfg.simplex_restarts, seed=cfg.solver.seed)
        basis = match_vertices_to_labels(fitted, canon, seen=labeled.labels_seen())
    extract_solution(res, basis)
    return Relaxation(res, basis)


def semi_supervised(
    M: ModifiedAdjacency,
    labeled: DiscreteLabeling,
    r: int | None = None,
    cfg: ActiveConfig = ActiveConfig(),
    warm_start=None,
) -> DiscreteLabeling:
    """Relax, align, round. Supervised labels pass through unchanged."""
    if r is not None and r != labeled.r:
        raise ParameterError(f"r={r} disagrees with labeling r={labeled.r}")
    if labeled.labeled_mask.all():
        return labeled
    rel = relax(M, labeled, cfg, warm_start)
    return round_labeling(rel.X, rel.basis, labeled)


def model_phi(
    M: ModifiedAdjacency,
    labeled: DiscreteLabeling,
    relaxed,
    basis: SimplexBasis,
    MX: np.ndarray | None = None,
) -> ModelMatrix:
    """Conditional label distribution of every unlabeled node; deltas on labeled ones."""
    rows = np.asarray(getattr(relaxed, "rows", relaxed), dtype=float)
    if rows.shape[0] != labeled.n:
        raise DimensionError("relaxed rows and labeling disagree on n")
    P = conditional_matrix(M, rows, basis, MX)
    mask = labeled.labeled_mask
    P[mask] = 0.0
    P[mask, labeled.assignments[mask]] = 1.0
    return ModelMatrix(P)


def _check_memc_state(labeled: DiscreteLabeling):
    if labeled.labeled_mask.all():
        raise StateError("no unlabeled nodes left to query")
    if not labeled.is_complete():
        raise StateError("expected model change needs every label supervised; use anchor_select")


def memc_scores(
    M: ModifiedAdjacency,
    relaxed,
    labeled: DiscreteLabeling,
    basis: SimplexBasis,
    mode: str = "rank1",
    solver: SolverConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Expected model change for every unlabeled node.

    ``rank1`` approximates the relaxation after labeling ``q`` by the
    current rows with row ``q`` overwritten by the hypothesized vertex; the
    cached ``S = M X`` is corrected by ``M[:, q] (X_q_new - X_q)^T``.
    ``exact`` re-solves the relaxation for every hypothesis, warm-started
    from the current rows, with the simplex held fixed.

    Returns:
        (candidate nodes, scores) in ascending node order.
    """
    _check_memc_state(labeled)
    rows = np.asarray(getattr(relaxed, "rows", relaxed), dtype=float)
    r = basis.r
    B = basis.vectors
    MX = matvec(M, rows)
    phi0 = model_phi(M, labeled, rows, basis, MX)
    P0 = phi0.probs
    cand = labeled.unlabeled_nodes
    scale = (r - 1) / r
    logits = scale * (MX @ B.T)
    free = ~labeled.labeled_mask
    scores = np.empty(cand.size)

    for k, q in enumerate(cand):
        expect = P0[q]
        if mode == "rank1":
            col = M.column(q)
            # shift of every node's logits for each hypothesis c: (r, n, r)
            shift = (B - rows[q]) @ B.T
            L = logits[None, :, :] + scale * col[None, :, None] * shift[:, None, :]
            Pc = softmax(L, axis=2)
            keep = free.copy()
            keep[q] = False
            deltas = np.abs(Pc[:, keep, :] - P0[None, keep, :]).sum(axis=(1, 2))
            onehot = np.eye(r)
            deltas += np.abs(onehot - P0[q][None, :]).sum(axis=1)
        elif mode == "exact":
            solver = solver or SolverConfig()
            deltas = np.empty(r)
            for c in range(r):
                after = labeled.with_label(int(q), c)
                res = solve_sdp(M, after, solver, warm_start=rows)
                deltas[c] = phi0.change(model_phi(M, after, res.X.rows, basis))
        else:
            raise ParameterError(f"unknown MEMC mode {mode!r}")
        scores[k] = float(expect @ deltas)
    return cand, scores


def memc_select(
    M: ModifiedAdjacency,
    relaxed,
    labeled: DiscreteLabeling,
    basis: SimplexBasis,
    mode: str = "rank1",
    solver: SolverConfig | None = None,
) -> tuple[int, float]:
    """Node maximizing expected model change; ties go to the lowest index."""
    cand, scores = memc_scores(M, relaxed, labeled, basis, mode, solver)
    k = _argmax_lowest(scores)
    return int(cand[k]), float(scores[k])


def anchor_select(
    M: ModifiedAdjacency,
    relaxed,
    labeled: DiscreteLabeling,
    basis: SimplexBasis,
) -> tuple[int, float]:
    """Node most likely to belong to a community with no supervised node yet."""
    if labeled.is_complete():
        raise StateError("all labels already supervised; use memc_select")
    if labeled.labeled_mask.all():
        raise StateError("no unlabeled nodes left to query")
    phi = model_phi(M, labeled, relaxed, basis).probs
    unseen = np.setdiff1d(np.arange(labeled.r), labeled.labels_seen())
    cand = labeled.unlabeled_nodes
    scores = phi[np.ix_(cand, unseen)].max(axis=1)
    k = _argmax_lowest(scores)
    return int(cand[k]), float(scores[k])


def _model(graph, p, q, labeled, cfg: ActiveConfig) -> ModifiedAdjacency:
    if cfg.estimate:
        p, q = estimate_params(graph, labeled, fallback=(p, q))
    return build_modified_adjacency(graph, p, q)


def active_loop(
    graph: Graph,
    p: float,
    q: float,
    truth: GroundTruth,
    Q: int,
    cfg: ActiveConfig = ActiveConfig(),
    initial: DiscreteLabeling | None = None,
) -> tuple[DiscreteLabeling, QueryLog]:
    """Query ``Q`` nodes one at a time, then label everything.

    ``log.history[k]`` holds the rounded labeling with ``k`` nodes
    queried, for every ``k`` in ``0..Q``.
    """
    n, r = graph.n, truth.r
    if not 0 <= Q <= n:
        raise ParameterError(f"query budget Q={Q} must lie in [0, {n}]")
    labeled = initial if initial is not None else DiscreteLabeling.unlabeled(n, r)
    log = QueryLog()
    warm = None
    for step in range(1, Q + 1):
        M = _model(graph, p, q, labeled, cfg)
        rel = relax(M, labeled, cfg, warm)
        pred = round_labeling(rel.X, rel.basis, labeled)
        log.history[step - 1] = pred.assignments
        if cfg.expectation == "relaxed":
            rows = rel.X.rows
        else:
            rows = rel.basis.embed(pred.assignments)
        if labeled.is_complete():
            node, score = memc_select(M, rows, labeled, rel.basis, cfg.mode, _solver_cfg(cfg, rows))
            rule = "memc"
        else:
            node, score = anchor_select(M, rows, labeled, rel.basis)
            rule = "anchor"
        lab = truth.label(node)
        labeled = labeled.with_label(node, lab)
        log.append(QueryRecord(step, node, lab, rule, score))
        logger.debug("step %d: %s picked node %d (score %.4g), label %d", step, rule, node, score, lab)
        warm = rel.X.rows
    M = _model(graph, p, q, labeled, cfg)
    final = semi_supervised(M, labeled, r, cfg, warm)
    log.history[Q] = final.assignments
    return final, log


def random_baseline_loop(
    graph: Graph,
    p: float,
    q: float,
    truth: GroundTruth,
    Q: int,
    seed: int,
    cfg: ActiveConfig = ActiveConfig(),
    checkpoints: Sequence[int] | None = None,
) -> tuple[DiscreteLabeling, QueryLog]:
    """Query ``Q`` uniformly random nodes, then run the semi-supervised labeler.

    The queried set is the first ``Q`` entries of one seeded permutation,
    so smaller budgets are prefixes of larger ones. ``checkpoints`` adds
    labelings for intermediate budgets to ``log.history``.
    """
    n, r = graph.n, truth.r
    if not 0 <= Q <= n:
        raise ParameterError(f"query budget Q={Q} must lie in [0, {n}]")
    order = np.random.default_rng(seed).permutation(n)[:Q]
    log = QueryLog()
    for step, node in enumerate(order, start=1):
        log.append(QueryRecord(step, int(node), truth.label(int(node)), "random", float("nan")))
    points = sorted(set(checkpoints or ()) | {Q})
    if points[0] < 0 or points[-1] > Q:
        raise ParameterError("checkpoints must lie in [0, Q]")
    warm = None
    final = None
    for k in points:
        known = {int(v): truth.label(int(v)) for v in order[:k]}
        labeled = DiscreteLabeling.partial(n, r, known)
        M = _model(graph, p, q, labeled, cfg)
        if labeled.labeled_mask.all():
            final = labeled
        else:
            rel = relax(M, labeled, cfg, warm)
            final = round_labeling(rel.X, rel.basis, labeled)
            warm = rel.X.rows
        log.history[k] = final.assignments
    return final, log


def accuracy(pred, truth: GroundTruth, queried=()) -> float:
    """Fraction of non-queried nodes labeled correctly.

    With no queries at all, label identities are arbitrary and the best
    permutation of predicted labels is used (optimal assignment on the
    confusion matrix).
    """
    assignments = np.asarray(getattr(pred, "assignments", pred))
    r_pred = getattr(pred, "r", truth.r)
    if r_pred != truth.r:
        raise ParameterError(f"prediction has r={r_pred}, truth has r={truth.r}")
    if assignments.shape != truth.labels.shape:
        raise DimensionError("prediction and truth differ in length")
    queried = np.asarray(list(queried), dtype=int)
    mask = np.ones(truth.n, dtype=bool)
    mask[queried] = False
    if not mask.any():
        return 1.0
    p, t = assignments[mask], truth.labels[mask]
    if queried.size:
        return float(np.mean(p == t))
    confusion = np.zeros((truth.r, truth.r))
    np.add.at(confusion, (p, t), 1.0)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum() / mask.sum())
