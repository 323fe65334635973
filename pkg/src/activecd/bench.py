"""Experiment runner: accuracy-vs-queries curves over replicate graphs, CSV output."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .active_learning import ActiveConfig, accuracy, active_loop, random_baseline_loop
from .errors import ActiveCDError, ParameterError
from .graph_model import EPS, SbmParams, read_edge_list, sbm_sample
from .sdp_solver import SolverConfig

logger = logging.getLogger(__name__)

ALGORITHMS = ("active", "random")

PRESETS = {
    # desk-scale synthetic ensembles: two weak communities, six strong ones
    "sbm-r2-a5-b2": dict(n=300, r=2, a=5.0, b=2.0),
    "sbm-r6-a9-b1": dict(n=300, r=6, a=9.0, b=1.0),
}

CSV_HEADER = "algorithm,pct_queried,acc_mean,acc_std,n_replicates"

__all__ = [
    "ALGORITHMS",
    "PRESETS",
    "ExperimentConfig",
    "AccuracyCurve",
    "ReplicateError",
    "load_config",
    "run_replicate",
    "run_experiment",
    "format_csv",
    "emit_csv",
]


class ReplicateError(ActiveCDError):
    def __init__(self, seed, algorithm, cause):
        self.seed = seed
        self.algorithm = algorithm
        super().__init__(f"replicate seed={seed} algorithm={algorithm}: {cause}")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 300
    r: int = 2
    a: float | None = 5.0
    b: float | None = 2.0
    p: float | None = None
    q: float | None = None
    seeds: tuple = tuple(range(10))
    grid: tuple | None = (0.0, 0.05, 0.10, 0.15, 0.20)
    queries: int | None = None
    algorithms: tuple = ALGORITHMS
    pq_source: str = "given"  # "given" or "estimated"
    edges: str | None = None
    labels: str | None = None
    out: str | None = None
    workers: int = 1
    mode: str = "rank1"
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.algorithms:
            raise ParameterError("at least one algorithm is required")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ParameterError(f"unknown algorithm(s): {sorted(bad)}")
        if not self.seeds:
            raise ParameterError("at least one seed is required")
        if self.pq_source not in ("given", "estimated"):
            raise ParameterError(f"pq_source must be 'given' or 'estimated', not {self.pq_source!r}")
        if (self.edges is None) != (self.labels is None):
            raise ParameterError("edges and labels must be given together")
        if self.edges is None and self.p is None and (self.a is None or self.b is None):
            raise ParameterError("SBM source needs (a, b) or (p, q)")
        if self.grid is None and self.queries is None:
            raise ParameterError("need a percentage grid or a query budget")
        if self.grid is not None and any(not 0.0 <= g <= 1.0 for g in self.grid):
            raise ParameterError("grid points are fractions in [0, 1]")

    def sbm_params(self) -> SbmParams:
        if self.p is not None and self.q is not None:
            return SbmParams(self.n, self.r, self.p, self.q)
        return SbmParams.sparse(self.n, self.r, self.a, self.b)

    def query_counts(self, n: int) -> list:
        """Sorted distinct numbers of queried nodes to evaluate."""
        if self.grid is not None:
            ks = sorted({int(round(g * n)) for g in self.grid})
        else:
            ks = list(range(self.queries + 1))
        if self.queries is not None:
            ks = [k for k in ks if k <= self.queries]
        if ks[-1] > n:
            raise ParameterError(f"query budget {ks[-1]} exceeds n={n}")
        return ks

    def active_config(self, seed: int) -> ActiveConfig:
        return ActiveConfig(
            solver=replace(self.solver, seed=seed),
            mode=self.mode,
            estimate=self.pq_source == "estimated",
        )


@dataclass(frozen=True)
class AccuracyCurve:
    algorithm: str
    pct_queried: np.ndarray
    acc_mean: np.ndarray
    acc_std: np.ndarray
    n_replicates: int


def _solver_from_mapping(raw: dict) -> SolverConfig:
    names = {f.name for f in fields(SolverConfig)}
    unknown = set(raw) - names
    if unknown:
        raise ParameterError(f"unknown solver option(s): {sorted(unknown)}")
    return SolverConfig(**raw)


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional YAML file, then apply overrides.

    Top-level keys mirror :class:`ExperimentConfig` fields; a ``preset``
    key pulls in one of :data:`PRESETS`; a nested ``solver`` section maps
    to :class:`SolverConfig`. Override values that are ``None`` are ignored.
    """
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ParameterError(f"cannot parse config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ParameterError(f"config {path} must be a mapping")
    raw = dict(raw)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    preset = overrides.pop("preset", None) or raw.pop("preset", None)
    raw.pop("preset", None)
    merged = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ParameterError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    solver_raw = dict(raw.pop("solver", None) or {})
    solver_raw.update(overrides.pop("solver", None) or {})
    merged.update(raw)
    merged.update(overrides)
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - names
    if unknown:
        raise ParameterError(f"unknown config key(s): {sorted(unknown)}")
    for key in ("seeds", "grid", "algorithms"):
        if key in merged and merged[key] is not None:
            merged[key] = tuple(merged[key])
    merged["solver"] = _solver_from_mapping(solver_raw)
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


def _load_source(cfg: ExperimentConfig, seed: int):
    """Graph, truth, and the (p, q) used to build the modified adjacency."""
    if cfg.edges is not None:
        graph, truth = read_edge_list(cfg.edges, cfg.labels, cfg.r)
        if cfg.p is not None and cfg.q is not None:
            return graph, truth, cfg.p, cfg.q
        # no model given: start from twice-density vs density until labels say otherwise
        rho = max(graph.density(), EPS)
        return graph, truth, min(2.0 * rho, 1.0 - EPS), rho
    params = cfg.sbm_params()
    graph, truth = sbm_sample(params, seed)
    return graph, truth, params.p, params.q


def run_replicate(cfg: ExperimentConfig, seed: int, algorithm: str) -> np.ndarray:
    """Accuracy at each query count of ``cfg.query_counts`` for one replicate."""
    try:
        graph, truth, p, q = _load_source(cfg, seed)
        ks = cfg.query_counts(graph.n)
        acfg = cfg.active_config(seed)
        if algorithm == "active":
            _, log = active_loop(graph, p, q, truth, ks[-1], acfg)
        else:
            _, log = random_baseline_loop(graph, p, q, truth, ks[-1], seed, acfg, checkpoints=ks)
        nodes = log.nodes()
        return np.array([accuracy(log.history[k], truth, nodes[:k]) for k in ks])
    except ActiveCDError as exc:
        raise ReplicateError(seed, algorithm, exc) from exc


def _run_one(args):
    cfg, seed, algorithm = args
    return run_replicate(cfg, seed, algorithm)


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run every (seed, algorithm) replicate and aggregate per algorithm.

    Replicates run in a process pool when ``cfg.workers > 1``; results are
    reduced in (algorithm, seed) order so the output does not depend on
    scheduling.
    """
    jobs = [(cfg, seed, alg) for alg in sorted(cfg.algorithms) for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]

    n = cfg.n if cfg.edges is None else _load_source(cfg, cfg.seeds[0])[0].n
    pct = np.array(cfg.query_counts(n)) / n
    curves = []
    for alg in sorted(cfg.algorithms):
        acc = np.array([res for (_, _, a), res in zip(jobs, results) if a == alg])
        curves.append(AccuracyCurve(alg, pct, acc.mean(axis=0), acc.std(axis=0), acc.shape[0]))
        logger.info("%s: %s", alg, np.round(acc.mean(axis=0), 4))
    return curves


def format_csv(curves) -> str:
    if not curves:
        raise ParameterError("no curves to write")
    rows = []
    for c in curves:
        for pct, mean, std in zip(c.pct_queried, c.acc_mean, c.acc_std):
            rows.append((c.algorithm, float(pct), float(mean), float(std), int(c.n_replicates)))
    rows.sort(key=lambda row: (row[0], row[1]))
    lines = [CSV_HEADER] + [f"{a},{p:.6f},{m:.6f},{s:.6f},{k}" for a, p, m, s, k in rows]
    return "\n".join(lines) + "\n"


def emit_csv(curves, path) -> Path:
    """Write curves as CSV with LF endings; nothing is created on error."""
    text = format_csv(curves)
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
