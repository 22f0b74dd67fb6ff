"""Exact t-SNE for the sample scatterplot.

Non-approximated (full pairwise) t-SNE with the standard recipe: binary
search of per-point bandwidths to match the target perplexity, early
exaggeration, and momentum gradient descent. Deterministic: initialization
is the first two principal components (scaled to 1e-4 standard deviation),
so identical inputs and seed give identical coordinates.

Runs on the sampled subset only; full-dataset projection is out of scope.
"""

from __future__ import annotations

import numpy as np

from .errors import SessionError

MACHINE_EPSILON = np.finfo(np.double).eps


def _conditional_probs(sq_dists: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic conditional P via binary search of per-row precision."""
    n = sq_dists.shape[0]
    target_entropy = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        beta_min, beta_max, beta = -np.inf, np.inf, 1.0
        row = sq_dists[i].copy()
        row[i] = np.inf  # exclude self
        for _ in range(100):
            p = np.exp(-row * beta)
            total = p.sum()
            if total <= 0:
                total = MACHINE_EPSILON
            p /= total
            entropy = -np.sum(p[p > 0] * np.log(p[p > 0]))
            diff = entropy - target_entropy
            if abs(diff) < 1e-5:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        P[i] = p
    return P


def _pca_init(features: np.ndarray) -> np.ndarray:
    centered = features - features.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    coords = centered @ vt[:2].T
    std = coords.std(axis=0)
    std[std == 0] = 1.0
    return coords / std * 1e-4


def tsne_embed(
    features: np.ndarray,
    seed: int = 0,
    perplexity: float | None = None,
    n_iter: int = 500,
    exaggeration: float = 12.0,
    exaggeration_iters: int = 100,
    learning_rate: float = 200.0,
) -> np.ndarray:
    """Embed (N', d) feature rows into 2-D.

    Perplexity defaults to min(30, (N' - 1) / 3). Requires N' >= 4.
    """
    n = features.shape[0]
    if n < 4:
        raise SessionError("projection needs at least 4 samples")
    if perplexity is None:
        perplexity = min(30.0, (n - 1) / 3.0)
    rng = np.random.default_rng(seed)  # reserved for tie jitter; init is PCA
    del rng

    sq = np.maximum(_squared_dists(features), 0.0)
    cond = _conditional_probs(sq, perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, MACHINE_EPSILON)

    Y = _pca_init(features)
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(n_iter):
        p_eff = P * exaggeration if it < exaggeration_iters else P
        momentum = 0.5 if it < 250 else 0.8

        num = 1.0 / (1.0 + _squared_dists(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), MACHINE_EPSILON)

        PQ = (p_eff - Q) * num
        grad = 4.0 * ((np.diag(PQ.sum(axis=1)) - PQ) @ Y)

        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - learning_rate * gains * grad
        Y += update
        Y -= Y.mean(axis=0)
    return Y


def _squared_dists(x: np.ndarray) -> np.ndarray:
    norms = np.sum(x * x, axis=1)
    sq = norms[:, None] + norms[None, :] - 2.0 * (x @ x.T)
    np.maximum(sq, 0.0, out=sq)
    return sq
