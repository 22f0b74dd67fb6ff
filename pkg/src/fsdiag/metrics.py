"""Scalar quantities feeding the selection objectives and evaluation.

All probability-based metrics floor probabilities at 1e-6 and renormalize
before taking logs, because the prototype classifier emits exact zeros for
classes without shots.
"""

from __future__ import annotations

import numpy as np

from .errors import SolverError
from .store import ShotSet

PROB_FLOOR = 1e-6
JACCARD_THRESHOLD = 0.2


def learner_sample_distance(margins: np.ndarray) -> np.ndarray:
    """Distance matrix D = 1 - margins, elementwise (K, N)."""
    margins = np.asarray(margins, dtype=np.float64)
    if margins.size and (margins.min() < 0 or margins.max() > 1):
        raise SolverError("margins must lie in [0, 1]")
    return 1.0 - margins


def _floored(probs: np.ndarray) -> np.ndarray:
    p = np.maximum(probs, PROB_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


def learner_fitness(per_learner_preds: list[np.ndarray], shots: ShotSet) -> np.ndarray:
    """Per-learner negative log-likelihood on the shots, averaged over shots.

    fitness[k] = -(1/M) * sum_j log max(y_k[shot_j, class_j], 1e-6).
    Lower is better; 0 means every shot's true class got probability 1.
    """
    if len(shots) == 0:
        raise SolverError("fitness requires a nonempty shot set")
    rows = np.array(shots.sample_indices())
    cols = np.array([c for _, c in shots.entries])
    out = np.empty(len(per_learner_preds))
    for k, probs in enumerate(per_learner_preds):
        p = np.maximum(probs[rows, cols], PROB_FLOOR)
        out[k] = -np.log(p).mean()
    return out


def _kl(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise KL(p || q) of two (N, C) matrices, already floored."""
    return np.sum(p * (np.log(p) - np.log(q)), axis=1)


def pairwise_cooperation(per_learner_preds: list[np.ndarray]) -> np.ndarray:
    """Symmetric-KL cooperation matrix (K, K), zero diagonal.

    mu[k, l] = sum_i (KL(y_ki || y_li) + KL(y_li || y_ki)) / (2 N); zero when
    two learners predict identically, larger the more they disagree.
    """
    K = len(per_learner_preds)
    if K < 2:
        raise SolverError("cooperation needs at least two learners")
    floored = [_floored(p) for p in per_learner_preds]
    n = floored[0].shape[0]
    mu = np.zeros((K, K))
    for k in range(K):
        for l in range(k + 1, K):
            val = (_kl(floored[k], floored[l]) + _kl(floored[l], floored[k])).sum()
            mu[k, l] = mu[l, k] = val / (2.0 * n)
    return mu


def sample_pairwise_distance(
    feature_blocks: list[np.ndarray], sample_indices=None
) -> np.ndarray:
    """Mean cosine distance between samples over the given learners' features.

    ``feature_blocks`` holds one unit-row (N, d_k) matrix per selected
    learner. Entries lie in [0, 2]; the diagonal is exactly 0. The result is
    symmetric but not a metric (triangle violations are possible after
    averaging).
    """
    if not feature_blocks:
        raise SolverError("sample distances need at least one selected learner")
    acc = None
    for block in feature_blocks:
        rows = block if sample_indices is None else block[sample_indices]
        sim = rows @ rows.T
        acc = sim if acc is None else acc + sim
    dist = 1.0 - acc / len(feature_blocks)
    np.fill_diagonal(dist, 0.0)
    np.clip(dist, 0.0, 2.0, out=dist)
    return (dist + dist.T) / 2.0


def sample_distance_to(
    feature_blocks: list[np.ndarray], anchor: int, targets
) -> np.ndarray:
    """One row of the sample distance matrix: anchor vs the target indices."""
    if not feature_blocks:
        raise SolverError("sample distances need at least one selected learner")
    targets = np.asarray(targets, dtype=np.int64)
    acc = np.zeros(targets.shape[0])
    for block in feature_blocks:
        acc += block[targets] @ block[anchor]
    dist = 1.0 - acc / len(feature_blocks)
    dist[targets == anchor] = 0.0
    return np.clip(dist, 0.0, 2.0)


def jaccard_diversity(
    margins: np.ndarray, threshold: float = JACCARD_THRESHOLD
) -> np.ndarray:
    """Jaccard overlap of high-confidence sample sets, per learner pair.

    S_k = {i : margins[k, i] > threshold}; entry (k, l) is
    |S_k intersect S_l| / |S_k union S_l|, or 0 when the union is empty.
    Smaller values mean more diverse learners.
    """
    high = np.asarray(margins) > threshold  # (K, N) bool
    inter = high.astype(np.int64) @ high.T.astype(np.int64)
    sizes = high.sum(axis=1)
    union = sizes[:, None] + sizes[None, :] - inter
    out = np.zeros_like(inter, dtype=np.float64)
    nz = union > 0
    out[nz] = inter[nz] / union[nz]
    return out


def mean_pairwise(matrix: np.ndarray, indices=None) -> float:
    """Mean of the strictly-upper-triangle entries over the given indices.

    This is the aggregate diversity/cooperation of a learner set: the average
    over unordered learner pairs. Returns 0.0 for sets of size < 2.
    """
    m = np.asarray(matrix)
    if indices is not None:
        idx = np.asarray(list(indices), dtype=np.int64)
        m = m[np.ix_(idx, idx)]
    k = m.shape[0]
    if k < 2:
        return 0.0
    iu = np.triu_indices(k, k=1)
    return float(m[iu].mean())
