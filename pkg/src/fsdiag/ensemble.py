"""Per-learner few-shot prediction and the weighted ensemble.

Each base learner classifies by cosine similarity to class prototypes built
from the shots: the prototype of a class is the L2-normalized mean of that
class's shot feature rows, and a sample's label distribution is the softmax
of temperature-scaled similarities over the classes that have prototypes.
Classes without shots receive probability exactly 0.

The ensemble distribution is the weighted mean of the selected learners'
distributions, normalized by the sum of weights so it stays a probability
vector under arbitrary nonnegative weights (equal to the plain average when
all weights are 1).
"""

from __future__ import annotations

import numpy as np

from .errors import SessionError
from .store import FeatureMatrix, ShotSet

DEFAULT_TEMPERATURE = 10.0


def class_prototypes(features: FeatureMatrix, shots: ShotSet) -> dict[int, np.ndarray]:
    """Unit-norm prototype per class with at least one shot.

    Returns a mapping class_index -> (cols,) vector. Classes without shots
    are absent from the map.
    """
    if len(shots) == 0:
        raise SessionError("cannot build prototypes from an empty shot set")
    prototypes = {}
    for c in shots.classes_with_shots():
        rows = shots.samples_of_class(c)
        mean = features.data[rows].mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            # Shot features cancelled out exactly; fall back to the first shot row.
            mean = features.data[rows[0]]
            norm = 1.0
        prototypes[c] = mean / norm
    return prototypes


def learner_predict(
    features: FeatureMatrix,
    prototypes: dict[int, np.ndarray],
    num_classes: int,
    temperature: float = DEFAULT_TEMPERATURE,
) -> np.ndarray:
    """Label distributions (N, C) of one learner.

    probs[i, c] = softmax over classes-with-prototypes of
    temperature * cos(features[i], prototype[c]); other classes get 0.
    """
    if not prototypes:
        raise SessionError("prototype map is empty")
    if temperature <= 0:
        raise SessionError("temperature must be positive")
    classes = sorted(prototypes)
    proto = np.stack([prototypes[c] for c in classes])  # (C', d)
    scores = temperature * (features.data @ proto.T)  # (N, C')
    scores -= scores.max(axis=1, keepdims=True)
    ex = np.exp(scores)
    probs_active = ex / ex.sum(axis=1, keepdims=True)
    probs = np.zeros((features.rows, num_classes))
    probs[:, classes] = probs_active
    return probs


def margin_confidence(dist: np.ndarray) -> float:
    """Top-1 minus top-2 probability of one distribution; 1.0 when C == 1."""
    if dist.shape[-1] < 2:
        return 1.0
    top2 = np.partition(dist, -2)[-2:]
    return float(top2[1] - top2[0])


def margins_of(probs: np.ndarray) -> np.ndarray:
    """Row-wise margin confidence of an (N, C) distribution matrix."""
    if probs.shape[1] < 2:
        return np.ones(probs.shape[0])
    top2 = np.partition(probs, -2, axis=1)[:, -2:]
    return top2[:, 1] - top2[:, 0]


def ensemble_predict(per_learner: list[np.ndarray], weights) -> np.ndarray:
    """Weighted mean of the selected learners' (N, C) distribution matrices."""
    weights = np.asarray(weights, dtype=np.float64)
    if len(per_learner) == 0:
        raise SessionError("ensemble requires at least one selected learner")
    if len(per_learner) != weights.shape[0]:
        raise SessionError("one weight per selected learner required")
    total = weights.sum()
    if total <= 0:
        raise SessionError("sum of ensemble weights must be positive")
    out = np.zeros_like(per_learner[0])
    for probs, w in zip(per_learner, weights):
        out += w * probs
    out /= total
    return out


def accuracy_eval(
    predictions: np.ndarray, ground_truth: np.ndarray, exclude=()
) -> float:
    """Fraction of non-excluded labeled samples whose argmax matches the label.

    Argmax ties break toward the lowest class index. Samples with label -1
    (unlabeled) are skipped.
    """
    if ground_truth is None:
        raise SessionError("ground truth labels are not available")
    mask = ground_truth >= 0
    if len(exclude):
        mask = mask.copy()
        mask[np.asarray(list(exclude), dtype=np.int64)] = False
    if not mask.any():
        raise SessionError("no labeled samples left to evaluate")
    pred = predictions[mask].argmax(axis=1)
    return float(np.mean(pred == ground_truth[mask]))
