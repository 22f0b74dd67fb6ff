"""Learner and shot recommenders built on the subset-selection solver.

Learner selection: rows are the candidate learners, columns the sampled
samples, distances are one minus the prediction margin. The sparsity weight
of learner k is half the maximum distance times its shot fitness (negative
log-likelihood), and jointly selecting two learners pays a pairwise penalty
proportional to the symmetric KL divergence of their predictions.

Shot selection: rows and columns are both the sampled samples, distances are
mean cosine distances under the selected learners. The sparsity weight of
sample i is alpha * beta_i * gamma_i with alpha = (max distance) / budget,
gamma_i the sample's mean margin over selected learners (low-confidence
samples are cheaper to pick) and beta_i = 0.1 for current shots (preserve
them) else 1.

Both recommenders are advisory: they never mutate the session. Applying a
recommendation is an explicit sequence of edits performed by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import metrics
from .errors import SessionError, SolverError
from .solver import SelectionProblem, SolverConfig, solve_selection
from .store import ShotSet

if TYPE_CHECKING:
    from .session import SessionState

SHOT_STABILITY = 0.1  # beta for current shots
DEFAULT_RATIO = 0.05
ALPHA_MAX_SOURCES = ("d_matrix", "mu_matrix")


@dataclass(frozen=True)
class SamplePlan:
    """Sampled working set: all current shots plus a seeded uniform draw."""

    seed: int
    ratio: float
    indices: np.ndarray  # sorted sample indices

    def __len__(self) -> int:
        return len(self.indices)


def sample_subset(n_samples: int, shots: ShotSet, ratio: float, seed: int) -> SamplePlan:
    """Uniform sample (without replacement) of ceil(ratio * #unlabeled)
    unlabeled indices, unioned with every current shot, sorted."""
    if not 0 < ratio <= 1:
        raise SessionError(f"ratio must be in (0, 1], got {ratio}", code="bad_ratio")
    shot_idx = np.asarray(shots.sample_indices(), dtype=np.int64)
    unlabeled = np.setdiff1d(np.arange(n_samples), shot_idx)
    count = math.ceil(ratio * unlabeled.size)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(unlabeled, size=count, replace=False) if count else unlabeled[:0]
    indices = np.sort(np.concatenate([shot_idx, chosen]))
    return SamplePlan(seed=seed, ratio=ratio, indices=indices)


@dataclass
class LearnerRecommendation:
    selected_learner_ids: list[str]
    objective: float
    per_learner: list[dict]  # id, fitness, row_max, selected
    diversity_before: float
    diversity_after: float
    cooperation_before: float
    cooperation_after: float
    seed: int
    ratio: float
    converged: bool


@dataclass
class ShotRecommendation:
    recommended_sample_indices: list[int]
    to_add: list[int]
    to_remove: list[int]
    objective: float
    per_sample: dict[int, dict]  # sample -> {gamma, beta}
    budget: int
    seed: int
    ratio: float
    converged: bool


@dataclass(frozen=True)
class RecommendConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    alpha_max_source: str = "d_matrix"

    def __post_init__(self):
        if self.alpha_max_source not in ALPHA_MAX_SOURCES:
            raise SolverError(
                f"alpha_max_source must be one of {ALPHA_MAX_SOURCES}"
            )


def build_learner_problem(
    session: "SessionState",
    plan: SamplePlan,
    config: RecommendConfig | None = None,
) -> tuple[SelectionProblem, dict]:
    """Assemble the learner-selection problem over the sampled indices.

    Returns the problem plus the intermediate quantities (distances, fitness,
    cooperation, the alpha weights) for reporting.
    """
    config = config or RecommendConfig()
    if len(session.shots) == 0:
        raise SessionError("learner selection needs shots", code="empty_shots")
    table = session.table()
    margins = table.per_learner_margins()[:, plan.indices]  # (K, N')
    distances = metrics.learner_sample_distance(margins)
    preds_full = table.per_learner_probs()
    fitness = metrics.learner_fitness(list(preds_full), session.shots)
    k_dim = len(session.learners)
    if k_dim >= 2:
        mu = metrics.pairwise_cooperation([p[plan.indices] for p in preds_full])
    else:
        mu = np.zeros((k_dim, k_dim))
    if config.alpha_max_source == "mu_matrix" and k_dim >= 2:
        alpha_max = float(mu.max())
    else:
        alpha_max = float(distances.max()) if distances.size else 0.0
    alpha1 = alpha2 = 0.5 * alpha_max
    problem = SelectionProblem(
        distances=distances,
        sparsity_weights=alpha1 * fitness,
        pairwise_penalty=alpha2 * mu if k_dim >= 2 else None,
    )
    info = {
        "fitness": fitness,
        "cooperation": mu,
        "margins": margins,
        "alpha1": alpha1,
        "alpha2": alpha2,
    }
    return problem, info


def recommend_learners(
    session: "SessionState",
    ratio: float = 1.0,
    seed: int | None = None,
    config: RecommendConfig | None = None,
) -> LearnerRecommendation:
    """Recommend a sparse learner subset; does not mutate the session."""
    config = config or RecommendConfig()
    if seed is None:
        seed = session.base_seed + session.next_nonce()
    plan = sample_subset(session.num_samples, session.shots, ratio, seed)
    problem, info = build_learner_problem(session, plan, config)
    result = solve_selection(problem, config.solver)
    ids = [session.learners[i].learner_id for i in result.selected]

    margins = session.table().per_learner_margins()[:, plan.indices]
    jaccard = metrics.jaccard_diversity(margins)
    mu = info["cooperation"]
    all_idx = range(len(session.learners))
    row_max = (
        result.relaxed.z.max(axis=1)
        if result.relaxed is not None and result.relaxed.z.size
        else np.zeros(len(session.learners))
    )
    per_learner = [
        {
            "id": state.learner_id,
            "fitness": float(info["fitness"][k]),
            "row_max": float(row_max[k]),
            "selected": k in result.selected,
        }
        for k, state in enumerate(session.learners)
    ]
    return LearnerRecommendation(
        selected_learner_ids=ids,
        objective=result.objective,
        per_learner=per_learner,
        diversity_before=metrics.mean_pairwise(jaccard, all_idx),
        diversity_after=metrics.mean_pairwise(jaccard, result.selected),
        cooperation_before=metrics.mean_pairwise(mu, all_idx),
        cooperation_after=metrics.mean_pairwise(mu, result.selected),
        seed=seed,
        ratio=ratio,
        converged=result.relaxed.converged if result.relaxed else True,
    )


def build_shot_problem(
    session: "SessionState",
    plan: SamplePlan,
    budget: int,
) -> tuple[SelectionProblem, dict]:
    """Assemble the shot-selection problem (rows = columns = plan indices)."""
    if budget <= 0:
        raise SessionError("shot budget must be positive", code="bad_budget")
    blocks = session.selected_feature_blocks()
    if not blocks:
        raise SessionError(
            "shot selection needs at least one selected learner",
            code="no_selection",
        )
    distances = metrics.sample_pairwise_distance(blocks, plan.indices)
    sel_idx = session.selected_indices()
    margins = session.table().per_learner_margins()[np.ix_(sel_idx, plan.indices)]
    gamma = margins.mean(axis=0)
    is_shot = np.fromiter(
        (int(i) in session.shots for i in plan.indices), dtype=bool, count=len(plan)
    )
    beta = np.where(is_shot, SHOT_STABILITY, 1.0)
    alpha_max = float(distances.max()) if distances.size else 0.0
    alpha = alpha_max / budget
    problem = SelectionProblem(
        distances=distances, sparsity_weights=alpha * beta * gamma
    )
    info = {"gamma": gamma, "beta": beta, "alpha": alpha}
    return problem, info


def _cap_to_budget(
    selected: np.ndarray,
    assignment: np.ndarray,
    distances: np.ndarray,
    weights: np.ndarray,
    budget: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Trim a selection down to the budget by repeatedly cutting the row with
    the lowest value density: coverage (columns represented besides its own)
    divided by its sparsity weight. Dividing by the weight carries the
    objective's stability preference through the cap (a current shot's 0.1
    beta makes it ~10x harder to cut), while zero-coverage rows, such as
    outlier shots representing only themselves, always go first. Ties cut the
    larger weight, then the higher index. Columns of a cut row are reassigned
    to the nearest survivor before the next cut.
    """
    selected = list(selected)
    assignment = assignment.copy()
    cols = np.arange(assignment.size)
    floor = max(1e-12, weights[weights > 0].min() * 1e-6) if (weights > 0).any() else 1e-12
    while len(selected) > budget:
        counts = {r: 0 for r in selected}
        for j, r in zip(cols, assignment):
            if r != j:  # own column does not count as coverage
                counts[r] += 1
        value = {r: counts[r] / max(weights[r], floor) for r in selected}
        victim = max(selected, key=lambda r: (-value[r], weights[r], r))
        selected.remove(victim)
        keep = np.array(selected)
        moved = assignment == victim
        if moved.any():
            local = distances[np.ix_(keep, cols[moved])].argmin(axis=0)
            assignment[moved] = keep[local]
    return np.array(sorted(selected)), assignment


def recommend_shots(
    session: "SessionState",
    budget: int,
    ratio: float = DEFAULT_RATIO,
    seed: int | None = None,
    config: RecommendConfig | None = None,
) -> ShotRecommendation:
    """Recommend a shot set of roughly ``budget`` samples; advisory only.

    The recommendation lists sample indices; class labels for additions come
    from the caller (a human, or ground truth inside simulation harnesses).
    """
    config = config or RecommendConfig()
    if seed is None:
        seed = session.base_seed + session.next_nonce()
    plan = sample_subset(session.num_samples, session.shots, ratio, seed)
    problem, info = build_shot_problem(session, plan, budget)
    result = solve_selection(problem, config.solver)

    selected = np.asarray(result.selected, dtype=np.int64)
    assignment = result.assignment
    if len(selected) > budget:
        selected, assignment = _cap_to_budget(
            selected,
            assignment,
            problem.distances,
            problem.sparsity_weights,
            budget,
        )

    recommended = sorted(int(plan.indices[i]) for i in selected)
    current = set(session.shots.sample_indices())
    to_add = sorted(set(recommended) - current)
    to_remove = sorted(current - set(recommended))
    per_sample = {
        int(plan.indices[i]): {
            "gamma": float(info["gamma"][i]),
            "beta": float(info["beta"][i]),
        }
        for i in range(len(plan))
    }
    return ShotRecommendation(
        recommended_sample_indices=recommended,
        to_add=to_add,
        to_remove=to_remove,
        objective=result.objective,
        per_sample=per_sample,
        budget=budget,
        seed=seed,
        ratio=ratio,
        converged=result.relaxed.converged if result.relaxed else True,
    )
