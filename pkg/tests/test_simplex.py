import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment
from scipy.stats import special_ortho_group

from activecd.errors import DimensionError, ParameterError
from activecd.simplex import (
    DiscreteLabeling,
    SimplexBasis,
    best_fit_simplex,
    canonical_simplex,
    match_vertices_to_labels,
    procrustes_align,
    round_labeling,
    spherical_kmeans,
)


def _unit(A):
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def _matched_angles(found, truth):
    """Angles between each true vertex and its optimally matched found vertex."""
    sim = np.clip(truth @ found.T, -1, 1)
    rows, cols = linear_sum_assignment(-sim)
    return np.arccos(sim[rows, cols])


def _assert_regular(basis, atol=1e-9):
    r = basis.r
    G = basis.gram()
    expected = np.full((r, r), -1.0 / (r - 1))
    np.fill_diagonal(expected, 1.0)
    assert np.allclose(G, expected, atol=atol, rtol=0)


class TestCanonicalSimplex:
    def test_r2(self):
        b = canonical_simplex(2, 1)
        assert b.vectors.ravel().tolist() == pytest.approx([1.0, -1.0])

    @pytest.mark.parametrize("r", [3, 4])
    def test_inner_products(self, r):
        _assert_regular(canonical_simplex(r), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(r=st.integers(2, 9), extra=st.integers(0, 5))
    def test_gram_table_exact(self, r, extra):
        b = canonical_simplex(r, r - 1 + extra)
        assert b.dim == r - 1 + extra
        _assert_regular(b, atol=1e-12)
        assert np.all(b.vectors[:, r - 1 :] == 0)

    def test_dim_too_small(self):
        with pytest.raises(DimensionError):
            canonical_simplex(4, 2)


class TestRoundLabeling:
    def test_exact_vertex(self):
        b = canonical_simplex(3, 4)
        assert round_labeling(b.vectors[[2]], b).assignments.tolist() == [2]

    def test_tie_goes_to_lowest(self):
        b = canonical_simplex(2, 2)
        assert round_labeling(np.array([[0.0, 1.0]]), b).assignments.tolist() == [0]

    def test_labeled_rows_keep_labels(self):
        b = canonical_simplex(2, 2)
        rows = np.array([[1.0, 0.0], [1.0, 0.0]])
        lab = DiscreteLabeling.partial(2, 2, {1: 1})
        out = round_labeling(rows, b, lab)
        assert out.assignments.tolist() == [0, 1]
        assert out.labeled_mask.tolist() == [False, True]

    def test_noisy_planted_recovery(self):
        b = canonical_simplex(3, 3)
        hits = total = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            labels = rng.integers(0, 3, 50)
            rows = _unit(b.vectors[labels] + 0.1 * rng.standard_normal((50, 3)))
            got = round_labeling(rows, b).assignments
            assert np.mean(got == labels) >= 0.95
            hits += np.sum(got == labels)
            total += 50
        assert hits / total >= 0.95

    def test_rotation_invariance(self, rng):
        for r in (2, 3, 5):
            d = r + 2
            b = canonical_simplex(r, d)
            rows = _unit(rng.standard_normal((40, d)))
            R = special_ortho_group.rvs(d, random_state=rng.integers(1 << 30))
            plain = round_labeling(rows, b).assignments
            rotated = round_labeling(rows @ R, SimplexBasis(b.vectors @ R)).assignments
            assert np.array_equal(plain, rotated)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            round_labeling(np.ones((2, 3)), canonical_simplex(2, 2))


class TestSphericalKmeans:
    def test_centroids_unit(self, rng):
        X = _unit(rng.standard_normal((30, 4)))
        C, assign = spherical_kmeans(X, 3, seed=1)
        assert np.allclose(np.linalg.norm(C, axis=1), 1.0)
        assert set(assign.tolist()) <= {0, 1, 2}

    def test_fewer_distinct_points_than_clusters(self):
        X = np.array([[1.0, 0.0]] * 5 + [[0.0, 1.0]] * 5)
        C, assign = spherical_kmeans(X, 3, restarts=3, seed=0)
        assert C.shape == (3, 2)
        assert np.all(np.isfinite(C))

    def test_too_few_rows(self):
        with pytest.raises(ParameterError):
            spherical_kmeans(np.eye(2), 3)


class TestBestFitSimplex:
    def test_exact_rotated_simplex(self, rng):
        for r in (2, 3, 4):
            d = r + 3
            R = special_ortho_group.rvs(d, random_state=int(rng.integers(1 << 30)))
            truth = canonical_simplex(r, d).vectors @ R
            rows = np.repeat(truth, 10, axis=0)
            found = best_fit_simplex(rows, r, seed=0)
            assert np.max(_matched_angles(found.vectors, truth)) <= 1e-6

    def test_antipodal_r2(self, rng):
        u = _unit(rng.standard_normal((1, 5)))[0]
        rows = np.vstack([u + 0.05 * rng.standard_normal((20, 5)), -u + 0.05 * rng.standard_normal((20, 5))])
        found = best_fit_simplex(_unit(rows), 2, seed=0)
        truth = np.vstack([u, -u])
        assert np.max(_matched_angles(found.vectors, truth)) < 0.05

    def test_noisy_r3_within_tenth_radian(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            d = 5
            R = special_ortho_group.rvs(d, random_state=seed)
            truth = canonical_simplex(3, d).vectors @ R
            labels = np.arange(60) % 3
            rows = _unit(truth[labels] + 0.05 * rng.standard_normal((60, d)))
            found = best_fit_simplex(rows, 3, seed=seed)
            assert np.max(_matched_angles(found.vectors, truth)) < 0.1

    @settings(max_examples=25, deadline=None)
    @given(r=st.integers(2, 5), n=st.integers(6, 40), seed=st.integers(0, 10_000))
    def test_output_always_regular(self, r, n, seed):
        rng = np.random.default_rng(seed)
        rows = _unit(rng.standard_normal((n, r + 1)))
        _assert_regular(best_fit_simplex(rows, r, restarts=3, seed=seed))

    def test_too_few_rows(self):
        with pytest.raises(ParameterError):
            best_fit_simplex(np.eye(3)[:2], 3)


class TestProcrustes:
    @pytest.mark.parametrize("r", [2, 3, 4])
    def test_beats_unrotated_canonical(self, r, rng):
        for _ in range(10):
            V = _unit(rng.standard_normal((r, r + 2)))
            aligned = procrustes_align(V)
            canon = canonical_simplex(r, r + 2)
            assert np.sum(aligned.vectors * V) >= np.sum(canon.vectors * V) - 1e-12

    @pytest.mark.parametrize("r", [2, 3, 4])
    def test_matches_semidefinite_program(self, r, rng):
        # alignment SDP over the joint Gram matrix of [simplex; V]
        cp = pytest.importorskip("cvxpy")
        for _ in range(3):
            V = _unit(rng.standard_normal((r, r + 1)))
            G = V @ V.T
            X = cp.Variable((2 * r, 2 * r), symmetric=True)
            cons = [X >> 0, cp.diag(X) == 1]
            for i in range(r):
                for j in range(r):
                    if i != j:
                        cons.append(X[i, j] == -1.0 / (r - 1))
                    cons.append(X[r + i, r + j] == G[i, j])
            A = np.zeros((2 * r, 2 * r))
            for i in range(r):
                A[i, i + r] = A[i + r, i] = 1.0
            prob = cp.Problem(cp.Maximize(cp.trace(A @ X)), cons)
            prob.solve(solver=cp.CLARABEL)
            aligned = procrustes_align(V)
            assert 2 * np.sum(aligned.vectors * V) == pytest.approx(prob.value, abs=1e-5)


def test_match_vertices_uses_seen_labels_only():
    canon = canonical_simplex(3, 3)
    perm = canon.vectors[[2, 0, 1]]
    out = match_vertices_to_labels(SimplexBasis(perm), canon, seen=[0])
    assert np.allclose(out.vectors[0], canon.vectors[0])
    out_all = match_vertices_to_labels(SimplexBasis(perm), canon)
    assert np.allclose(out_all.vectors, canon.vectors)
