"""Mutable tuning-session state: learners, shots, edit log, prediction cache.

Edits are appended to a log and never removed; ``undo`` is itself an edit
that deactivates the most recent active edit. The current state is always a
pure fold of the active edits over the initial state, so replaying the log
reproduces it exactly. Predictions are cached against a hash of the inputs
that determine them (shots for the per-learner table, plus selection and
weights for the ensemble) and recomputed lazily after edits.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import ensemble
from .errors import SessionError
from .store import DataBundle, Manifest, ShotSet, load_bundle


@dataclass
class LearnerState:
    learner_id: str
    selected: bool = False
    weight: float = 1.0


@dataclass(frozen=True)
class EditCommand:
    kind: str  # add_shot | remove_shot | set_learner | set_weight | undo
    sample: Optional[int] = None
    class_index: Optional[int] = None
    learner_id: Optional[str] = None
    selected: Optional[bool] = None
    weight: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict) -> "EditCommand":
        kind = data.get("kind")
        if kind == "add_shot":
            return cls(kind, sample=int(data["sample"]), class_index=int(data["class"]))
        if kind == "remove_shot":
            return cls(kind, sample=int(data["sample"]))
        if kind == "set_learner":
            return cls(kind, learner_id=str(data["learner_id"]), selected=bool(data["selected"]))
        if kind == "set_weight":
            return cls(kind, learner_id=str(data["learner_id"]), weight=float(data["weight"]))
        if kind == "undo":
            return cls(kind)
        raise SessionError(f"unknown edit kind {kind!r}", code="bad_edit")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.sample is not None:
            out["sample"] = self.sample
        if self.class_index is not None:
            out["class"] = self.class_index
        if self.learner_id is not None:
            out["learner_id"] = self.learner_id
        if self.selected is not None:
            out["selected"] = self.selected
        if self.weight is not None:
            out["weight"] = self.weight
        return out


class PredictionTable:
    """Lazy per-learner and ensemble predictions for one state snapshot."""

    def __init__(self, session: "SessionState"):
        self._session = session
        self._per_learner: np.ndarray | None = None  # (K, N, C)
        self._per_learner_margins: np.ndarray | None = None  # (K, N)
        self._ensemble: np.ndarray | None = None  # (N, C)
        self._ensemble_margins: np.ndarray | None = None  # (N,)

    def per_learner_probs(self) -> np.ndarray:
        if self._per_learner is None:
            s = self._session
            mats = []
            for state in s.learners:
                fm = s.bundle.features[state.learner_id]
                protos = ensemble.class_prototypes(fm, s.shots)
                mats.append(
                    ensemble.learner_predict(
                        fm, protos, s.num_classes, s.temperature
                    )
                )
            self._per_learner = np.stack(mats)
        return self._per_learner

    def per_learner_margins(self) -> np.ndarray:
        if self._per_learner_margins is None:
            probs = self.per_learner_probs()
            self._per_learner_margins = np.stack(
                [ensemble.margins_of(p) for p in probs]
            )
        return self._per_learner_margins

    def ensemble_probs(self) -> np.ndarray:
        if self._ensemble is None:
            s = self._session
            idx = s.selected_indices()
            if not idx:
                raise SessionError(
                    "no learner selected; select or recommend learners first",
                    code="no_selection",
                )
            probs = self.per_learner_probs()
            weights = [s.learners[i].weight for i in idx]
            self._ensemble = ensemble.ensemble_predict(
                [probs[i] for i in idx], weights
            )
        return self._ensemble

    def ensemble_margins(self) -> np.ndarray:
        if self._ensemble_margins is None:
            self._ensemble_margins = ensemble.margins_of(self.ensemble_probs())
        return self._ensemble_margins


class SessionState:
    def __init__(self, bundle: DataBundle, base_seed: int = 0, temperature: float = ensemble.DEFAULT_TEMPERATURE):
        if len(bundle.shots) == 0:
            raise SessionError("manifest has no shots", code="empty_shots")
        self.session_id = uuid.uuid4().hex
        self.bundle = bundle
        self.base_seed = int(base_seed)
        self.temperature = float(temperature)
        self.learners = [LearnerState(lid) for lid in bundle.learner_ids]
        self.shots: ShotSet = bundle.shots
        self.edit_log: list[EditCommand] = []
        self._recommend_counter = 0
        self._table_cache: dict[str, PredictionTable] = {}

    # -- basic accessors -------------------------------------------------

    @property
    def manifest(self) -> Manifest:
        return self.bundle.manifest

    @property
    def num_samples(self) -> int:
        return self.manifest.num_samples

    @property
    def num_classes(self) -> int:
        return self.manifest.num_classes

    def learner(self, learner_id: str) -> LearnerState:
        for state in self.learners:
            if state.learner_id == learner_id:
                return state
        raise SessionError(f"unknown learner {learner_id!r}", code="unknown_learner")

    def selected_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.learners) if s.selected]

    def selected_ids(self) -> list[str]:
        return [s.learner_id for s in self.learners if s.selected]

    def selected_feature_blocks(self) -> list[np.ndarray]:
        return [self.bundle.features[lid].data for lid in self.selected_ids()]

    def next_nonce(self) -> int:
        self._recommend_counter += 1
        return self._recommend_counter

    # -- hashing ---------------------------------------------------------

    def _state_payload(self) -> dict:
        return {
            "learners": [
                (s.learner_id, s.selected, s.weight) for s in self.learners
            ],
            "shots": sorted(self.shots.entries),
            "base_seed": self.base_seed,
            "temperature": self.temperature,
        }

    def state_hash(self) -> str:
        payload = json.dumps(self._state_payload(), sort_keys=True)
        return hashlib.md5(payload.encode()).hexdigest()

    # -- predictions -----------------------------------------------------

    def table(self) -> PredictionTable:
        key = self.state_hash()
        if key not in self._table_cache:
            self._table_cache.clear()  # single-entry cache; edits move on
            self._table_cache[key] = PredictionTable(self)
        return self._table_cache[key]

    def accuracy(self) -> float | None:
        if self.bundle.ground_truth is None or not self.selected_indices():
            return None
        return ensemble.accuracy_eval(
            self.table().ensemble_probs(),
            self.bundle.ground_truth,
            exclude=self.shots.sample_indices(),
        )

    # -- edits -----------------------------------------------------------

    def _check_edit(self, cmd: EditCommand) -> None:
        if cmd.kind == "add_shot":
            if cmd.sample in self.shots:
                raise SessionError(
                    f"sample {cmd.sample} is already a shot", code="duplicate_shot"
                )
            if not 0 <= cmd.sample < self.num_samples:
                raise SessionError("shot sample out of range", code="bad_edit")
            if not 0 <= cmd.class_index < self.num_classes:
                raise SessionError("shot class out of range", code="bad_edit")
        elif cmd.kind == "remove_shot":
            if cmd.sample not in self.shots:
                raise SessionError(
                    f"sample {cmd.sample} is not a shot", code="not_a_shot"
                )
            if len(self.shots) == 1:
                raise SessionError(
                    "cannot remove the last shot", code="empty_shots"
                )
        elif cmd.kind == "set_learner":
            self.learner(cmd.learner_id)
        elif cmd.kind == "set_weight":
            self.learner(cmd.learner_id)
            if cmd.weight < 0:
                raise SessionError("weight must be nonnegative", code="bad_edit")
        elif cmd.kind == "undo":
            if not self._active_edits():
                raise SessionError("nothing to undo", code="nothing_to_undo")
        else:
            raise SessionError(f"unknown edit kind {cmd.kind!r}", code="bad_edit")

    def _active_edits(self) -> list[EditCommand]:
        active: list[EditCommand] = []
        for cmd in self.edit_log:
            if cmd.kind == "undo":
                if active:
                    active.pop()
            else:
                active.append(cmd)
        return active

    def _apply_to_state(self, cmd: EditCommand) -> None:
        if cmd.kind == "add_shot":
            self.shots = ShotSet(list(self.shots.entries) + [(cmd.sample, cmd.class_index)])
        elif cmd.kind == "remove_shot":
            self.shots = ShotSet(
                [(s, c) for s, c in self.shots.entries if s != cmd.sample]
            )
        elif cmd.kind == "set_learner":
            self.learner(cmd.learner_id).selected = cmd.selected
        elif cmd.kind == "set_weight":
            self.learner(cmd.learner_id).weight = cmd.weight

    def _rebuild_from_log(self) -> None:
        self.shots = self.bundle.shots
        self.learners = [LearnerState(lid) for lid in self.bundle.learner_ids]
        for cmd in self._active_edits():
            self._apply_to_state(cmd)

    def apply_edit(self, cmd: EditCommand) -> dict:
        """Validate, apply, and log one edit; returns a state summary."""
        self._check_edit(cmd)
        self.edit_log.append(cmd)
        if cmd.kind == "undo":
            self._rebuild_from_log()
        else:
            self._apply_to_state(cmd)
        return self.summary()

    def replay(self) -> "SessionState":
        """Fresh state built by replaying this session's edit log."""
        twin = SessionState(self.bundle, self.base_seed, self.temperature)
        for cmd in self.edit_log:
            twin.edit_log.append(cmd)
        twin._rebuild_from_log()
        return twin

    def summary(self) -> dict:
        return {
            "session_id": self.session_id,
            "state_hash": self.state_hash(),
            "num_shots": len(self.shots),
            "selected_learners": self.selected_ids(),
            "weights": {s.learner_id: s.weight for s in self.learners if s.selected},
            "accuracy": self.accuracy(),
            "log_length": len(self.edit_log),
        }


def validate_session_inputs(manifest: Manifest, base_seed: int = 0) -> SessionState:
    """Load everything the manifest references and build the initial state:
    every learner unselected at weight 1.0, shots from the manifest."""
    bundle = load_bundle(manifest)
    return SessionState(bundle, base_seed=base_seed)


def save_snapshot(session: SessionState, path, manifest_path) -> None:
    """Write the session as JSON lines: a header, then one edit per line.

    The snapshot stores the manifest path, not the data, so restoring
    re-loads the bundle and replays the log.
    """
    import json as _json
    from pathlib import Path as _Path

    lines = [
        _json.dumps(
            {
                "manifest": str(manifest_path),
                "base_seed": session.base_seed,
                "temperature": session.temperature,
                "state_hash": session.state_hash(),
            }
        )
    ]
    lines.extend(_json.dumps(cmd.to_dict()) for cmd in session.edit_log)
    _Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_snapshot(path) -> SessionState:
    """Restore a session from a snapshot file; verifies the state hash."""
    import json as _json
    from pathlib import Path as _Path

    from .store import load_manifest

    lines = _Path(path).read_text(encoding="utf-8").splitlines()
    header = _json.loads(lines[0])
    manifest = load_manifest(header["manifest"])
    session = validate_session_inputs(manifest, base_seed=header["base_seed"])
    session.temperature = header["temperature"]
    for line in lines[1:]:
        session.edit_log.append(EditCommand.from_dict(_json.loads(line)))
    session._rebuild_from_log()
    if session.state_hash() != header["state_hash"]:
        raise SessionError(
            "snapshot replay does not reproduce the recorded state",
            code="snapshot_mismatch",
        )
    return session
