"""Batch evaluation harness: baseline vs recommended learners/shots.

Four arms per trial, all sharing the trial's pool and initial shots:

- ``baseline``: every learner selected, the given shots.
- ``rec_learners``: recommended learner subset, the given shots.
- ``rec_shots``: every learner, recommended shots (budget = initial count).
- ``both``: recommended learners, then shots recommended under them.

Class labels for recommended shot additions come from ground truth (the
harness simulates the human labeler); kept shots keep their current labels,
including any mislabeled ones the recommender failed to drop. Accuracy per
arm excludes that arm's own shot samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SessionError
from .metrics import jaccard_diversity, mean_pairwise, pairwise_cooperation
from .recommenders import RecommendConfig, recommend_learners, recommend_shots
from .session import SessionState
from .store import DataBundle, ShotSet


@dataclass
class EvalProtocol:
    trials: int = 10
    base_seed: int = 0
    learner_ratio: float = 1.0
    shot_ratio: float = 0.4
    shot_budget: int | None = None  # default: same count as the initial shots
    temperature: float = 10.0
    recommend: RecommendConfig = field(default_factory=RecommendConfig)


@dataclass
class TrialResult:
    seed: int
    accuracy: dict[str, float]
    n_recommended_learners: int
    selected_learner_ids: list[str]
    diversity_before: float
    diversity_after: float
    cooperation_before: float
    cooperation_after: float
    shots_added: int
    shots_removed: int


@dataclass
class EvalReport:
    trials: list[TrialResult]

    def mean_accuracy(self) -> dict[str, float]:
        arms = self.trials[0].accuracy.keys()
        return {
            arm: float(np.mean([t.accuracy[arm] for t in self.trials]))
            for arm in arms
        }

    def mean_recommended_learners(self) -> float:
        return float(np.mean([t.n_recommended_learners for t in self.trials]))

    def win_rate(self, arm: str, over: str = "baseline", strict: bool = False) -> float:
        wins = [
            t.accuracy[arm] > t.accuracy[over]
            if strict
            else t.accuracy[arm] >= t.accuracy[over]
            for t in self.trials
        ]
        return float(np.mean(wins))

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy(),
            "mean_recommended_learners": self.mean_recommended_learners(),
            "mean_diversity_before": float(
                np.mean([t.diversity_before for t in self.trials])
            ),
            "mean_diversity_after": float(
                np.mean([t.diversity_after for t in self.trials])
            ),
            "mean_cooperation_before": float(
                np.mean([t.cooperation_before for t in self.trials])
            ),
            "mean_cooperation_after": float(
                np.mean([t.cooperation_after for t in self.trials])
            ),
            "win_rate_rec_learners": self.win_rate("rec_learners"),
            "win_rate_rec_shots_strict": self.win_rate("rec_shots", strict=True),
            "win_rate_both": self.win_rate("both"),
            "trials": len(self.trials),
        }


def _session(bundle: DataBundle, seed: int, protocol: EvalProtocol, select_all: bool) -> SessionState:
    s = SessionState(bundle, base_seed=seed, temperature=protocol.temperature)
    if select_all:
        select_learners(s, [st.learner_id for st in s.learners])
    return s


def select_learners(session: SessionState, learner_ids) -> None:
    """Set the selection through edits so the session log stays replayable."""
    from .session import EditCommand

    wanted = set(learner_ids)
    for st in session.learners:
        if st.selected != (st.learner_id in wanted):
            session.apply_edit(
                EditCommand(
                    kind="set_learner",
                    learner_id=st.learner_id,
                    selected=st.learner_id in wanted,
                )
            )


def _apply_shot_recommendation(
    session: SessionState, recommended: list[int], ground_truth: np.ndarray
) -> tuple[int, int]:
    """Swap the session's shot set for the recommended one; labels for
    additions come from ground truth. Returns (#added, #removed)."""
    current = {s: c for s, c in session.shots.entries}
    new_entries = []
    added = removed = 0
    for idx in recommended:
        if idx in current:
            new_entries.append((idx, current[idx]))
        else:
            if ground_truth[idx] < 0:
                raise SessionError(f"sample {idx} has no ground-truth label")
            new_entries.append((idx, int(ground_truth[idx])))
            added += 1
    removed = len(current) - (len(new_entries) - added)
    session.shots = ShotSet(new_entries)
    return added, removed


def run_trial(bundle: DataBundle, seed: int, protocol: EvalProtocol) -> TrialResult:
    if bundle.ground_truth is None:
        raise SessionError("evaluation requires ground truth", code="no_ground_truth")
    budget = protocol.shot_budget or len(bundle.shots)
    accuracy: dict[str, float] = {}

    base = _session(bundle, seed, protocol, select_all=True)
    accuracy["baseline"] = base.accuracy()

    rec_l = recommend_learners(
        base, ratio=protocol.learner_ratio, seed=seed, config=protocol.recommend
    )
    sel = set(rec_l.selected_learner_ids)

    arm_l = _session(bundle, seed, protocol, select_all=False)
    select_learners(arm_l, sel)
    accuracy["rec_learners"] = arm_l.accuracy()

    arm_s = _session(bundle, seed, protocol, select_all=True)
    rec_s = recommend_shots(
        arm_s, budget=budget, ratio=protocol.shot_ratio, seed=seed,
        config=protocol.recommend,
    )
    added, removed = _apply_shot_recommendation(
        arm_s, rec_s.recommended_sample_indices, bundle.ground_truth
    )
    accuracy["rec_shots"] = arm_s.accuracy()

    arm_b = _session(bundle, seed, protocol, select_all=False)
    select_learners(arm_b, sel)
    rec_s2 = recommend_shots(
        arm_b, budget=budget, ratio=protocol.shot_ratio, seed=seed,
        config=protocol.recommend,
    )
    _apply_shot_recommendation(
        arm_b, rec_s2.recommended_sample_indices, bundle.ground_truth
    )
    accuracy["both"] = arm_b.accuracy()

    return TrialResult(
        seed=seed,
        accuracy=accuracy,
        n_recommended_learners=len(sel),
        selected_learner_ids=sorted(sel),
        diversity_before=rec_l.diversity_before,
        diversity_after=rec_l.diversity_after,
        cooperation_before=rec_l.cooperation_before,
        cooperation_after=rec_l.cooperation_after,
        shots_added=added,
        shots_removed=removed,
    )


def run_eval(bundle: DataBundle, protocol: EvalProtocol) -> EvalReport:
    """Run the four-arm comparison over the protocol's trials.

    The same bundle is used for every trial; trial-to-trial variation comes
    from the recommendation seeds. For fully independent trials (fresh pools
    and shots), drive ``run_trial`` directly, as the synthetic acceptance
    harness does.
    """
    trials = [
        run_trial(bundle, protocol.base_seed + t, protocol)
        for t in range(protocol.trials)
    ]
    return EvalReport(trials=trials)


def learner_set_stats(session: SessionState, learner_indices) -> tuple[float, float]:
    """(mean pairwise Jaccard diversity, mean pairwise cooperation) of a
    learner subset on the full sample set."""
    table = session.table()
    margins = table.per_learner_margins()
    jac = jaccard_diversity(margins)
    probs = table.per_learner_probs()
    mu = pairwise_cooperation(list(probs)) if len(probs) >= 2 else np.zeros((1, 1))
    return mean_pairwise(jac, learner_indices), mean_pairwise(mu, learner_indices)
