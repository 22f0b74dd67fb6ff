import numpy as np
import pytest

from fsdiag import metrics
from fsdiag.store import ShotSet


def test_distance_is_one_minus_margin():
    m = np.array([[1.0, 0.0, 0.3, 0.9]])
    d = metrics.learner_sample_distance(m)
    assert d[0, 0] == 0.0 and d[0, 1] == 1.0
    np.testing.assert_allclose(d, [[0.0, 1.0, 0.7, 0.1]], rtol=0, atol=1e-15)


def test_distance_exact_elementwise():
    rng = np.random.default_rng(0)
    m = rng.uniform(size=(6, 40))
    d = metrics.learner_sample_distance(m)
    assert np.array_equal(d, 1.0 - m)  # exact, not approximate


def test_fitness_perfect_learner_is_zero():
    probs = np.zeros((4, 2))
    probs[0, 0] = 1.0
    probs[1, 1] = 1.0
    probs[2:, 0] = 1.0
    shots = ShotSet([(0, 0), (1, 1)])
    lam = metrics.learner_fitness([probs], shots)
    assert lam[0] == pytest.approx(0.0, abs=1e-12)


def test_fitness_inverse_e():
    probs = np.full((2, 2), 0.5)
    probs[:, 0] = 1.0 / np.e
    probs[:, 1] = 1.0 - 1.0 / np.e
    shots = ShotSet([(0, 0), (1, 0)])
    lam = metrics.learner_fitness([probs], shots)
    assert lam[0] == pytest.approx(1.0)


def test_fitness_floor_applied():
    probs = np.zeros((1, 2))
    probs[0, 1] = 1.0  # assigns 0 to the shot's class
    shots = ShotSet([(0, 0)])
    lam = metrics.learner_fitness([probs], shots)
    assert lam[0] == pytest.approx(-np.log(1e-6), rel=1e-6)
    assert lam[0] == pytest.approx(13.8155, abs=1e-3)


def test_cooperation_identical_learners_zero():
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(3), size=10)
    mu = metrics.pairwise_cooperation([probs, probs.copy()])
    assert mu[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_cooperation_symmetric_zero_diagonal():
    rng = np.random.default_rng(2)
    mats = [rng.dirichlet(np.ones(4), size=12) for _ in range(4)]
    mu = metrics.pairwise_cooperation(mats)
    assert np.array_equal(mu, mu.T)
    assert np.all(np.diag(mu) == 0.0)
    assert mu.min() >= 0.0


def test_cooperation_matches_scalar_kl_oracle():
    a = np.array([[0.9, 0.1]])
    b = np.array([[0.1, 0.9]])
    mu = metrics.pairwise_cooperation([a, b])

    def kl(p, q):
        p = np.maximum(p, 1e-6)
        p = p / p.sum()
        q = np.maximum(q, 1e-6)
        q = q / q.sum()
        return sum(pi * (np.log(pi) - np.log(qi)) for pi, qi in zip(p, q))

    expected = (kl(a[0], b[0]) + kl(b[0], a[0])) / (2 * 1)
    assert mu[0, 1] == pytest.approx(expected, abs=1e-9)


def test_cooperation_oracle_random_instances():
    rng = np.random.default_rng(3)
    mats = [rng.dirichlet(np.ones(3), size=5) for _ in range(3)]
    mu = metrics.pairwise_cooperation(mats)

    def kl_rows(p, q):
        p = np.maximum(p, 1e-6)
        p = p / p.sum(axis=1, keepdims=True)
        q = np.maximum(q, 1e-6)
        q = q / q.sum(axis=1, keepdims=True)
        total = 0.0
        for i in range(p.shape[0]):
            for c in range(p.shape[1]):
                total += p[i, c] * (np.log(p[i, c]) - np.log(q[i, c]))
        return total

    for k in range(3):
        for l in range(k + 1, 3):
            expected = (kl_rows(mats[k], mats[l]) + kl_rows(mats[l], mats[k])) / (2 * 5)
            assert mu[k, l] == pytest.approx(expected, abs=1e-9)


def _unit_rows(rng, n, d):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def test_sample_distance_diagonal_zero_and_symmetric():
    rng = np.random.default_rng(4)
    blocks = [_unit_rows(rng, 8, 5), _unit_rows(rng, 8, 3)]
    d = metrics.sample_pairwise_distance(blocks)
    assert np.all(np.diag(d) == 0.0)
    assert np.array_equal(d, d.T)
    assert d.min() >= 0.0 and d.max() <= 2.0


def test_sample_distance_orthogonal_is_one():
    blocks = [np.eye(2)]
    d = metrics.sample_pairwise_distance(blocks)
    assert d[0, 1] == pytest.approx(1.0)


def test_sample_distance_matches_double_loop_oracle():
    rng = np.random.default_rng(5)
    blocks = [_unit_rows(rng, 4, 6), _unit_rows(rng, 4, 6)]
    d = metrics.sample_pairwise_distance(blocks)
    for i in range(4):
        for j in range(4):
            if i == j:
                assert d[i, j] == 0.0
                continue
            expected = np.mean(
                [1.0 - float(np.dot(b[i], b[j])) for b in blocks]
            )
            assert d[i, j] == pytest.approx(expected, abs=1e-9)


def test_sample_distance_subset_consistency():
    rng = np.random.default_rng(6)
    blocks = [_unit_rows(rng, 10, 4)]
    full = metrics.sample_pairwise_distance(blocks)
    sub_idx = np.array([1, 4, 7])
    sub = metrics.sample_pairwise_distance(blocks, sub_idx)
    np.testing.assert_allclose(sub, full[np.ix_(sub_idx, sub_idx)], atol=1e-12)


def test_sample_distance_to_matches_matrix():
    rng = np.random.default_rng(7)
    blocks = [_unit_rows(rng, 9, 4), _unit_rows(rng, 9, 7)]
    full = metrics.sample_pairwise_distance(blocks)
    row = metrics.sample_distance_to(blocks, 3, np.arange(9))
    np.testing.assert_allclose(row, full[3], atol=1e-12)


def test_jaccard_identical_sets():
    margins = np.array([[0.5, 0.9, 0.1], [0.6, 0.8, 0.15]])
    j = metrics.jaccard_diversity(margins)
    assert j[0, 1] == pytest.approx(1.0)


def test_jaccard_disjoint_sets():
    margins = np.array([[0.9, 0.1], [0.1, 0.9]])
    j = metrics.jaccard_diversity(margins)
    assert j[0, 1] == 0.0


def test_jaccard_half_overlap():
    # sets {1,2,3} and {2,3,4} -> 2/4
    margins = np.zeros((2, 5))
    margins[0, [1, 2, 3]] = 0.9
    margins[1, [2, 3, 4]] = 0.9
    j = metrics.jaccard_diversity(margins)
    assert j[0, 1] == pytest.approx(0.5)


def test_jaccard_empty_union_is_zero():
    margins = np.zeros((2, 4))
    j = metrics.jaccard_diversity(margins)
    assert j[0, 1] == 0.0


def test_jaccard_range():
    rng = np.random.default_rng(8)
    j = metrics.jaccard_diversity(rng.uniform(size=(6, 30)))
    assert j.min() >= 0.0 and j.max() <= 1.0


def test_mean_pairwise():
    m = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
    assert metrics.mean_pairwise(m) == pytest.approx(2.0)
    assert metrics.mean_pairwise(m, [0, 1]) == pytest.approx(1.0)
    assert metrics.mean_pairwise(m, [2]) == 0.0
