"""Analytics behind the learner matrix view and the sample scatterplot.

Everything here is a pure function of the session's prediction snapshot
except ``adjust_weight``, which mutates the session through its edit log
(one ``set_weight`` edit, so it is undoable).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from . import ensemble, metrics
from .errors import SessionError
from .projection import tsne_embed
from .recommenders import SamplePlan
from .session import EditCommand

if TYPE_CHECKING:
    from .session import SessionState

INFLUENCE_THRESHOLD = 0.2
HISTOGRAM_BINS = ((0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0))
WEIGHT_GRID_MAX = 5.0
WEIGHT_GRID_STEP = 0.1


@dataclass
class AgreementBreakdown:
    learner_id: str
    overall_diff: int  # samples where learner argmax != ensemble argmax
    per_class: list[tuple[int, int, int]]  # (learner_only, both, ensemble_only)


def agreement_breakdown(
    learner_probs: np.ndarray, ensemble_probs: np.ndarray, learner_id: str = ""
) -> AgreementBreakdown:
    lp = learner_probs.argmax(axis=1)
    ep = ensemble_probs.argmax(axis=1)
    n_classes = learner_probs.shape[1]
    per_class = []
    for c in range(n_classes):
        l_hit = lp == c
        e_hit = ep == c
        both = int(np.sum(l_hit & e_hit))
        per_class.append((int(l_hit.sum()) - both, both, int(e_hit.sum()) - both))
    return AgreementBreakdown(
        learner_id=learner_id,
        overall_diff=int(np.sum(lp != ep)),
        per_class=per_class,
    )


def confidence_histogram(
    probs: np.ndarray, margins: np.ndarray, class_index: int
) -> list[int]:
    """Counts of samples argmax-predicted to ``class_index`` in the four
    margin bins [0, .25), [.25, .5), [.5, .75), [.75, 1]."""
    mask = probs.argmax(axis=1) == class_index
    m = margins[mask]
    counts = []
    for i, (lo, hi) in enumerate(HISTOGRAM_BINS):
        if i == len(HISTOGRAM_BINS) - 1:
            counts.append(int(np.sum((m >= lo) & (m <= hi))))
        else:
            counts.append(int(np.sum((m >= lo) & (m < hi))))
    return counts


@dataclass
class InfluenceReport:
    learner_id: str
    deltas: np.ndarray  # margin(with learner) - margin(without learner)
    up: list[int] = field(default_factory=list)  # delta >= +0.2
    down: list[int] = field(default_factory=list)  # delta <= -0.2


def learner_influence(session: "SessionState", learner_id: str) -> InfluenceReport:
    """Per-sample ensemble margin change with vs without the learner.

    A selected learner is left out (weights renormalized); an unselected one
    is hypothetically added at weight 1.
    """
    state = session.learner(learner_id)
    table = session.table()
    probs = table.per_learner_probs()
    idx = session.selected_indices()
    k = session.bundle.learner_ids.index(learner_id)
    weights = [session.learners[i].weight for i in idx]

    if state.selected:
        without_idx = [i for i in idx if i != k]
        if not without_idx:
            raise SessionError(
                "cannot compute influence of the only selected learner",
                code="sole_learner",
            )
        with_probs = table.ensemble_probs()
        without_probs = ensemble.ensemble_predict(
            [probs[i] for i in without_idx],
            [session.learners[i].weight for i in without_idx],
        )
    else:
        if not idx:
            raise SessionError("no selected learners", code="no_selection")
        without_probs = table.ensemble_probs()
        with_probs = ensemble.ensemble_predict(
            [probs[i] for i in idx] + [probs[k]], weights + [1.0]
        )

    deltas = ensemble.margins_of(with_probs) - ensemble.margins_of(without_probs)
    return InfluenceReport(
        learner_id=learner_id,
        deltas=deltas,
        up=[int(i) for i in np.flatnonzero(deltas >= INFLUENCE_THRESHOLD)],
        down=[int(i) for i in np.flatnonzero(deltas <= -INFLUENCE_THRESHOLD)],
    )


@dataclass
class CoverageReport:
    shot_index: int
    neighbors: list[tuple[int, float]]  # (unlabeled sample, similarity) desc


def shot_coverage(session: "SessionState", shot_index: int, k_cov: int = 20) -> CoverageReport:
    """Top-k most similar unlabeled samples of one shot, under the selected
    learners' averaged cosine similarity."""
    if shot_index not in session.shots:
        raise SessionError(f"sample {shot_index} is not a shot", code="not_a_shot")
    blocks = session.selected_feature_blocks()
    if not blocks:
        raise SessionError("no selected learners", code="no_selection")
    shot_samples = set(session.shots.sample_indices())
    unlabeled = np.array(
        [i for i in range(session.num_samples) if i not in shot_samples],
        dtype=np.int64,
    )
    sims = 1.0 - metrics.sample_distance_to(blocks, shot_index, unlabeled)
    order = np.lexsort((unlabeled, -sims))[:k_cov]
    return CoverageReport(
        shot_index=shot_index,
        neighbors=[(int(unlabeled[j]), float(sims[j])) for j in order],
    )


@dataclass
class ClusterTree:
    kind: str  # "learners" | "classes"
    item_ids: list[str]
    merges: list[tuple[int, int, float]]  # scipy linkage rows (a, b, height)
    labels: list[int]  # cut assignment, 1..target_count
    target_count: int


def _agglomerate(dist: np.ndarray, ids: list[str], target_count: int, kind: str) -> ClusterTree:
    n = len(ids)
    if not 1 <= target_count <= n:
        raise SessionError(
            f"target_count must be in [1, {n}]", code="bad_cluster_count"
        )
    if n == 1:
        return ClusterTree(kind, ids, [], [1], target_count)
    condensed = squareform(np.maximum(dist, 0.0), checks=False)
    z = linkage(condensed, method="average")
    labels = fcluster(z, t=target_count, criterion="maxclust")
    merges = [(int(a), int(b), float(h)) for a, b, h, _ in z]
    return ClusterTree(kind, ids, merges, [int(x) for x in labels], target_count)


def cluster_learners(
    cooperation: np.ndarray, learner_ids: list[str], target_count: int
) -> ClusterTree:
    """Average-linkage clustering of learners under symmetric-KL distance."""
    return _agglomerate(cooperation, learner_ids, target_count, "learners")


def cluster_classes(session: "SessionState", target_count: int) -> ClusterTree:
    """Average-linkage clustering of classes on Euclidean distance between
    class features: the normalized mean of each class's shots in the
    concatenated selected-learner space, concatenated with the normalized
    label embedding when present. Classes without shots use a zero shot
    block (only valid when embeddings exist)."""
    ids = session.selected_ids() or session.bundle.learner_ids
    concat = session.bundle.concatenated_features(ids)
    embeddings = session.bundle.label_embeddings
    rows = []
    for c in range(session.num_classes):
        shot_rows = session.shots.samples_of_class(c)
        if shot_rows:
            mean = concat[shot_rows].mean(axis=0)
            norm = np.linalg.norm(mean)
            shot_feat = mean / norm if norm > 0 else mean
        elif embeddings is not None:
            shot_feat = np.zeros(concat.shape[1])
        else:
            raise SessionError(
                f"class {c} has neither shots nor a label embedding",
                code="class_without_feature",
            )
        if embeddings is not None:
            emb = embeddings[c]
            norm = np.linalg.norm(emb)
            emb = emb / norm if norm > 0 else emb
            shot_feat = np.concatenate([shot_feat, emb])
        rows.append(shot_feat)
    feats = np.stack(rows)
    diff = feats[:, None, :] - feats[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return _agglomerate(
        dist, list(session.manifest.class_names), target_count, "classes"
    )


@dataclass
class Projection2D:
    indices: np.ndarray  # plan indices (N',)
    coords: np.ndarray  # (N', 2)
    seed: int
    method: str = "tsne-exact"


def project_samples(session: "SessionState", plan: SamplePlan, seed: int) -> Projection2D:
    """Exact t-SNE of the plan's samples in the concatenated selected-learner
    feature space."""
    ids = session.selected_ids()
    if not ids:
        raise SessionError("no selected learners", code="no_selection")
    concat = session.bundle.concatenated_features(ids)
    coords = tsne_embed(concat[plan.indices], seed=seed)
    return Projection2D(indices=plan.indices, coords=coords, seed=seed)


@dataclass
class WeightAdjustment:
    learner_id: str
    old_weight: float
    new_weight: float
    objective_before: float
    objective_after: float
    improved: bool


def _consistency_objective(
    ens: np.ndarray, target_s1: np.ndarray, prev: np.ndarray, s1_mask: np.ndarray
) -> float:
    pred = ens.argmax(axis=1)
    s2_mask = ~s1_mask
    term1 = float(np.mean(pred[s1_mask] == target_s1)) if s1_mask.any() else 0.0
    term2 = float(np.mean(pred[s2_mask] == prev[s2_mask])) if s2_mask.any() else 0.0
    return term1 + term2


def adjust_weight(
    session: "SessionState",
    learner_id: str,
    direction: str,
    selection: list[int],
) -> WeightAdjustment:
    """Grid-search the learner's weight to match the user's intent.

    On the user-selected samples S1 the new ensemble should agree with the
    learner (increase) or with the ensemble without it (decrease); on the
    complement S2 it should keep its previous predictions. Candidates are
    grid weights strictly beyond the current one in the chosen direction;
    ties pick the weight closest to the current one, and if every candidate
    scores below the current weight's objective the weight is unchanged.
    """
    if direction not in ("increase", "decrease"):
        raise SessionError(f"bad direction {direction!r}", code="bad_direction")
    if not selection:
        raise SessionError("selection S1 must be nonempty", code="empty_selection")
    state = session.learner(learner_id)
    if not state.selected:
        raise SessionError(f"learner {learner_id!r} is not selected", code="not_selected")

    table = session.table()
    probs = table.per_learner_probs()
    idx = session.selected_indices()
    k = session.bundle.learner_ids.index(learner_id)
    others = [i for i in idx if i != k]
    current = state.weight

    grid = np.round(np.arange(0.0, WEIGHT_GRID_MAX + 1e-9, WEIGHT_GRID_STEP), 10)
    if direction == "increase":
        candidates = [w for w in grid if w > current + 1e-12]
    else:
        candidates = [w for w in grid if w < current - 1e-12]
    if not candidates:
        raise SessionError(
            f"cannot {direction} weight beyond {current}", code="direction_infeasible"
        )

    prev_pred = table.ensemble_probs().argmax(axis=1)
    s1_mask = np.zeros(session.num_samples, dtype=bool)
    s1_mask[np.asarray(selection, dtype=np.int64)] = True

    if direction == "increase":
        target_s1 = probs[k].argmax(axis=1)[s1_mask]
    else:
        if not others:
            raise SessionError(
                "cannot decrease the only selected learner against itself",
                code="sole_learner",
            )
        without = ensemble.ensemble_predict(
            [probs[i] for i in others],
            [session.learners[i].weight for i in others],
        )
        target_s1 = without.argmax(axis=1)[s1_mask]

    def objective(w: float) -> float:
        mats = [probs[i] for i in others] + [probs[k]]
        weights = [session.learners[i].weight for i in others] + [w]
        if sum(weights) <= 0:
            return -np.inf
        ens = ensemble.ensemble_predict(mats, weights)
        return _consistency_objective(ens, target_s1, prev_pred, s1_mask)

    obj_current = objective(current)
    # Candidates ordered by distance from the current weight, so the first
    # maximizer is automatically the tie-break winner (closest to current).
    ordered = sorted(candidates, key=lambda w: abs(w - current))
    best_w, best_obj = ordered[0], -np.inf
    for w in ordered:
        obj = objective(w)
        if obj > best_obj + 1e-12:
            best_w, best_obj = w, obj

    if best_obj < obj_current - 1e-12:
        return WeightAdjustment(
            learner_id, current, current, obj_current, obj_current, False
        )
    session.apply_edit(
        EditCommand(kind="set_weight", learner_id=learner_id, weight=float(best_w))
    )
    return WeightAdjustment(
        learner_id, current, float(best_w), obj_current, best_obj, True
    )
