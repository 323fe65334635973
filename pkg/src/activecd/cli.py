"""Command line entry point: ``activecd gen|run|bench``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 size cap
exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .active_learning import accuracy, active_loop, random_baseline_loop, relax
from .bench import PRESETS, ReplicateError, _load_source, emit_csv, format_csv, load_config, run_experiment
from .errors import ActiveCDError, DataError, ParameterError, SizeCapError
from .graph_model import build_modified_adjacency, sbm_sample, write_edge_list
from .likelihood import approx_ratio_certificate, brute_force_ml, labeling_score
from .simplex import DiscreteLabeling, round_labeling

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SIZE = 0, 2, 3, 4


def _int_list(text):
    """``"10"`` means seeds 0..9; ``"3,5,8"`` is an explicit list."""
    parts = [s for s in text.split(",") if s.strip()]
    if len(parts) == 1 and "," not in text:
        return tuple(range(int(parts[0])))
    return tuple(int(s) for s in parts)


def _float_list(text):
    return tuple(float(s) for s in text.split(",") if s.strip())


def _str_list(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _add_common(p):
    p.add_argument("--config", help="YAML experiment config; flags override it")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--edges", metavar="PATH")
    p.add_argument("--labels", metavar="PATH")
    p.add_argument("--rank", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--mode", choices=("rank1", "exact"))
    p.add_argument("--pq-source", dest="pq_source", choices=("given", "estimated"))
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activecd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="sample an SBM graph and write edge list + labels")
    gen.add_argument("--preset", choices=sorted(PRESETS))
    gen.add_argument("--n", type=int)
    gen.add_argument("--r", type=int)
    gen.add_argument("--a", type=float)
    gen.add_argument("--b", type=float)
    gen.add_argument("--p", type=float)
    gen.add_argument("--q", type=float)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--edges", metavar="PATH", required=True)
    gen.add_argument("--labels", metavar="PATH", required=True)
    gen.add_argument("-v", "--verbose", action="count", default=0)

    run = sub.add_parser("run", help="one replicate with a verbose query log")
    _add_common(run)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--queries", type=int, default=0)
    run.add_argument("--algorithms", type=_str_list, default=("active",))
    run.add_argument("--exact-ml", action="store_true", help="also compute the brute-force ML labeling (small graphs only)")

    bench = sub.add_parser("bench", help="full accuracy-vs-queries grid to CSV")
    _add_common(bench)
    bench.add_argument("--seeds", type=_int_list)
    bench.add_argument("--queries", type=int)
    bench.add_argument("--grid", type=_float_list)
    bench.add_argument("--algorithms", type=_str_list)
    bench.add_argument("--workers", type=int)
    bench.add_argument("--out", metavar="PATH")
    return parser


def _overrides(args) -> dict:
    keys = ("preset", "n", "r", "a", "b", "p", "q", "edges", "labels", "mode", "pq_source",
            "seeds", "queries", "grid", "algorithms", "workers", "out")
    over = {k: getattr(args, k, None) for k in keys}
    over["solver"] = {
        k: v
        for k, v in (("rank", args.rank), ("restarts", args.restarts), ("grad_tol", args.tol))
        if v is not None
    }
    return over


def _cmd_gen(args) -> int:
    cfg = load_config(None, {k: getattr(args, k) for k in ("preset", "n", "r", "a", "b", "p", "q")})
    params = cfg.sbm_params()
    graph, truth = sbm_sample(params, args.seed)
    write_edge_list(graph, truth, args.edges, args.labels)
    print(f"wrote n={graph.n} m={graph.num_edges} r={params.r} p={params.p:.6g} q={params.q:.6g} snr={params.snr:.6g}")
    return EXIT_OK


def _cmd_run(args) -> int:
    over = _overrides(args)
    over["queries"] = args.queries
    over["seeds"] = (args.seed,)
    over["algorithms"] = args.algorithms
    cfg = load_config(args.config, over)
    graph, truth, p, q = _load_source(cfg, args.seed)
    if args.queries > graph.n:
        raise ParameterError(f"--queries {args.queries} exceeds n={graph.n}")
    acfg = cfg.active_config(args.seed)
    M = build_modified_adjacency(graph, p, q)
    print(f"# n={graph.n} m={graph.num_edges} r={truth.r} p={p:.6g} q={q:.6g}")
    for alg in cfg.algorithms:
        if alg == "active":
            pred, log = active_loop(graph, p, q, truth, args.queries, acfg)
        else:
            pred, log = random_baseline_loop(graph, p, q, truth, args.queries, args.seed, acfg)
        print(f"[{alg}] step,node,label,rule,score")
        for rec in log.records:
            print(f"[{alg}] {rec.step},{rec.node},{rec.label},{rec.rule},{rec.score:.6f}")
        acc = accuracy(pred, truth, log.nodes())
        print(f"[{alg}] accuracy={acc:.6f} score={labeling_score(M, pred, truth.r):.6f}")
        if args.exact_ml:
            queried = DiscreteLabeling.partial(graph.n, truth.r, {rec.node: rec.label for rec in log.records})
            ml = brute_force_ml(M, queried, truth.r)
            rel = relax(M, queried, acfg)
            rounded = round_labeling(rel.X, rel.basis, queried)
            cert = approx_ratio_certificate(M, rounded, rel.X)
            log_ratio = labeling_score(M, rounded, truth.r) - labeling_score(M, ml, truth.r)
            print(f"[{alg}] certificate={cert.value:.6g} true_ratio={np.exp(log_ratio):.6g}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    curves = run_experiment(cfg)
    if cfg.out:
        emit_csv(curves, cfg.out)
    else:
        sys.stdout.write(format_csv(curves))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    handler = {"gen": _cmd_gen, "run": _cmd_run, "bench": _cmd_bench}[args.command]
    try:
        return handler(args)
    except ReplicateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code_for(exc.__cause__)
    except (ActiveCDError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code_for(exc)


def _code_for(exc) -> int:
    if isinstance(exc, SizeCapError):
        return EXIT_SIZE
    if isinstance(exc, (DataError, OSError)):
        return EXIT_DATA
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
