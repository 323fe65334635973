import itertools

import numpy as np
import pytest

from activecd.errors import DimensionError, ParameterError, StateError
from activecd.graph_model import Graph, build_modified_adjacency
from activecd.sdp_solver import (
    SolverConfig,
    default_rank,
    extract_solution,
    riemannian_gradient,
    solve_sdp,
    trace_score,
)
from activecd.simplex import DiscreteLabeling, best_fit_simplex, canonical_simplex, round_labeling

from conftest import dense_m, random_instance, two_cliques

TIGHT = SolverConfig(grad_tol=1e-9, max_iters=20000, restarts=3)


def _unit(A):
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def discrete_max(D, labeled):
    """Largest Tr(X^T M X) over completions, by plain enumeration with a dense M."""
    r = labeled.r
    free = labeled.unlabeled_nodes
    G = np.full((r, r), -1.0 / (r - 1))
    np.fill_diagonal(G, 1.0)
    best, arg = -np.inf, None
    lab = labeled.assignments.copy()
    for combo in itertools.product(range(r), repeat=free.size):
        lab[free] = combo
        s = float(np.sum(D * G[lab][:, lab]))
        if s > best + 1e-12:
            best, arg = s, lab.copy()
    return best, arg


def random_pins(rng, n, r, k):
    nodes = rng.choice(n, size=k, replace=False)
    return DiscreteLabeling.partial(n, r, {int(v): int(rng.integers(r)) for v in nodes})


class TestTraceScore:
    def test_zero_when_uninformative(self, rng):
        g = Graph.from_edges(4, [(0, 1)])
        with pytest.warns(UserWarning):
            M = build_modified_adjacency(g, 0.3, 0.3)
        assert trace_score(M, _unit(rng.standard_normal((4, 3)))) == 0.0

    def test_single_edge_equal_rows(self):
        M = build_modified_adjacency(Graph.from_edges(2, [(0, 1)]), 0.6, 0.2)
        X = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert trace_score(M, X) == pytest.approx(2 * M.w_in)

    def test_matches_dense_double_sum(self, rng):
        g, M, p, q, edges = random_instance(rng, 8, 2)
        X = _unit(rng.standard_normal((8, 4)))
        D = dense_m(8, edges, M.p, M.q)
        brute = sum(D[i, j] * X[i] @ X[j] for i in range(8) for j in range(8) if i != j)
        assert trace_score(M, X) == pytest.approx(brute, abs=1e-10)

    def test_dimension_mismatch(self):
        M = build_modified_adjacency(Graph.from_edges(3, []), 0.5, 0.1)
        with pytest.raises(DimensionError):
            trace_score(M, np.ones((4, 2)))


class TestSolveSdp:
    def test_planted_two_clique_recovered(self):
        g, labels = two_cliques([4, 4])
        M = build_modified_adjacency(g, 1 - 1e-6, 1e-6)
        lab = DiscreteLabeling.partial(8, 2, {0: 0, 4: 1})
        res = solve_sdp(M, lab)
        got = round_labeling(res.X, canonical_simplex(2, res.X.d), lab).assignments
        assert np.array_equal(got, labels)
        _, ml = discrete_max(M.to_dense(), lab)
        assert np.array_equal(got, ml)

    def test_relaxation_dominates_discrete_max(self):
        rng = np.random.default_rng(2024)
        for trial in range(20):
            n = int(rng.integers(4, 11))
            r = 2 if trial % 2 == 0 else 3
            k = int(rng.integers(0, 3))
            if r == 3 and n - k > 8:
                n = 8 + k
            g, M, *_ = random_instance(rng, n, r, density=float(rng.uniform(0.2, 0.7)))
            lab = random_pins(rng, n, r, k)
            res = solve_sdp(M, lab, SolverConfig(seed=trial))
            best, _ = discrete_max(M.to_dense(), lab)
            assert res.objective >= best - 1e-6

    def test_feasibility_and_pins(self, rng):
        g, M, *_ = random_instance(rng, 30, 3, density=0.2)
        lab = DiscreteLabeling.partial(30, 3, {0: 0, 5: 1, 9: 2, 11: 0})
        res = solve_sdp(M, lab, SolverConfig(seed=4))
        X = res.X.rows
        assert np.allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-8)
        basis = canonical_simplex(3, res.X.d)
        for node, c in ((0, 0), (5, 1), (9, 2), (11, 0)):
            assert np.array_equal(X[node], basis.vectors[c])
        assert res.objective == pytest.approx(trace_score(M, X), rel=1e-8)

    def test_objective_non_decreasing(self, rng):
        g, M, *_ = random_instance(rng, 40, 2, density=0.15)
        res = solve_sdp(M, DiscreteLabeling.unlabeled(40, 2), SolverConfig(restarts=1))
        assert np.all(np.diff(res.history) >= 0)

    def test_deterministic(self, rng):
        g, M, *_ = random_instance(rng, 25, 2, density=0.2)
        lab = DiscreteLabeling.partial(25, 2, {3: 1})
        a = solve_sdp(M, lab, SolverConfig(seed=9))
        b = solve_sdp(M, lab, SolverConfig(seed=9))
        assert np.array_equal(a.X.rows, b.X.rows)
        assert a.objective == b.objective and a.restart_index == b.restart_index

    def test_converges_to_tolerance(self, rng):
        g, M, *_ = random_instance(rng, 30, 2, density=0.2)
        res = solve_sdp(M, DiscreteLabeling.unlabeled(30, 2), TIGHT)
        assert res.grad_norm <= 1e-9

    def test_warm_start_not_worse_than_cold(self):
        rng = np.random.default_rng(77)
        for trial in range(10):
            n = int(rng.integers(12, 30))
            g, M, *_ = random_instance(rng, n, 2, density=0.25)
            lab = DiscreteLabeling.partial(n, 2, {0: 0})
            prev = solve_sdp(M, lab, replace_seed(TIGHT, trial))
            lab2 = lab.with_label(1, 1)
            cold = solve_sdp(M, lab2, replace_seed(TIGHT, trial))
            warm = solve_sdp(M, lab2, replace_seed(TIGHT, trial), warm_start=prev.X)
            assert warm.objective >= cold.objective - 1e-6

    def test_warm_start_shape_checked(self, rng):
        g, M, *_ = random_instance(rng, 10, 2)
        with pytest.raises(DimensionError):
            solve_sdp(M, DiscreteLabeling.unlabeled(10, 2), warm_start=np.ones((10, 2)))

    def test_rank_below_r_rejected(self):
        with pytest.raises(ParameterError):
            SolverConfig(rank=2).resolve_rank(10, 3)

    def test_default_rank(self):
        assert default_rank(300, 2) == 25
        assert default_rank(4, 3) == 4


def replace_seed(cfg, seed):
    from dataclasses import replace

    return replace(cfg, seed=seed)


class TestGradient:
    @pytest.mark.parametrize("seed", range(3))
    def test_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        g, M, *_ = random_instance(rng, 12, 3, density=0.4)
        free = np.ones(12, bool)
        free[[0, 1]] = False
        for _ in range(10):
            X = _unit(rng.standard_normal((12, 5)))
            G = riemannian_gradient(M, X, free)
            V = rng.standard_normal(X.shape)
            V -= np.sum(V * X, axis=1, keepdims=True) * X
            V[~free] = 0.0
            h = 1e-5
            fd = (trace_score(M, X + h * V) - trace_score(M, X - h * V)) / (2 * h)
            analytic = float(np.sum(G * V))
            assert abs(fd - analytic) <= 1e-5 * max(abs(analytic), 1e-12)

    def test_pinned_rows_have_zero_gradient(self, rng):
        g, M, *_ = random_instance(rng, 6, 2)
        free = np.array([True, False, True, True, False, True])
        G = riemannian_gradient(M, _unit(rng.standard_normal((6, 3))), free)
        assert np.all(G[~free] == 0)


class TestExtractSolution:
    def test_complete_labels_pass_through(self, rng):
        g, M, *_ = random_instance(rng, 8, 2)
        res = solve_sdp(M, DiscreteLabeling.partial(8, 2, {0: 0, 1: 1}))
        assert extract_solution(res) is res.X

    def test_unpinned_strong_graph_antipodal(self):
        g, labels = two_cliques([5, 5])
        M = build_modified_adjacency(g, 1 - 1e-6, 1e-6)
        res = solve_sdp(M, DiscreteLabeling.unlabeled(10, 2))
        G = res.X.rows @ res.X.rows.T
        same = labels[:, None] == labels[None, :]
        assert np.all(G[same] > 0.99)
        assert np.all(G[~same] < -0.99)

    def test_partial_labels_need_fitted_simplex(self):
        g, labels = two_cliques([4, 4])
        M = build_modified_adjacency(g, 0.9, 0.1)
        res = solve_sdp(M, DiscreteLabeling.partial(8, 2, {0: 0}))
        with pytest.raises(StateError):
            extract_solution(res)
        basis = best_fit_simplex(res.X.rows, 2)
        assert extract_solution(res, basis) is res.X
