"""HTTP/JSON API for interactive tuning sessions.

Sessions live in memory. Handlers serialize per session (one lock each), so
edits have a total order; requests for different sessions run concurrently.
Every recommendation response carries the state hash it was computed
against, and mutating requests may pass ``state_hash`` to be rejected with
409 if the session has moved on (the stale-recommendation guard).
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import diagnostics
from .errors import FsdiagError, ManifestError, SessionError
from .metrics import learner_fitness, pairwise_cooperation
from .recommenders import (
    DEFAULT_RATIO,
    RecommendConfig,
    recommend_learners,
    recommend_shots,
    sample_subset,
)
from .session import EditCommand, SessionState, validate_session_inputs
from .solver import SolverConfig
from .store import load_manifest


class CreateSessionRequest(BaseModel):
    manifest_path: str
    seed: int = 0
    temperature: Optional[float] = None


class EditRequest(BaseModel):
    command: dict
    state_hash: Optional[str] = None


class RecommendLearnersRequest(BaseModel):
    ratio: float = 1.0
    seed: Optional[int] = None
    config: Optional[dict] = None


class RecommendShotsRequest(BaseModel):
    budget: int
    ratio: float = DEFAULT_RATIO
    seed: Optional[int] = None
    config: Optional[dict] = None


class WeightAdjustRequest(BaseModel):
    learner_id: str
    direction: str
    selection: list[int]
    state_hash: Optional[str] = None


class SessionRegistry:
    def __init__(self):
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    def add(self, session: SessionState) -> None:
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.RLock()

    def get(self, session_id: str) -> tuple[SessionState, threading.RLock]:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise HTTPException(404, detail=f"unknown session {session_id}")
            return self._sessions[session_id], self._locks[session_id]


def _recommend_config(data: Optional[dict]) -> RecommendConfig:
    if not data:
        return RecommendConfig()
    solver = SolverConfig.from_dict(data)
    return RecommendConfig(
        solver=solver,
        alpha_max_source=data.get("alpha_max_source", "d_matrix"),
    )


def create_app(ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="fsdiag")
    registry = SessionRegistry()
    app.state.registry = registry

    def guard_hash(session: SessionState, expected: Optional[str]) -> None:
        if expected is not None and expected != session.state_hash():
            raise HTTPException(
                409,
                detail={
                    "code": "stale_state",
                    "expected": expected,
                    "current": session.state_hash(),
                },
            )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/api/sessions")
    def create_session(req: CreateSessionRequest) -> dict:
        try:
            manifest = load_manifest(req.manifest_path)
            session = validate_session_inputs(manifest, base_seed=req.seed)
            if req.temperature is not None:
                session.temperature = req.temperature
        except (ManifestError, SessionError) as exc:
            raise HTTPException(422, detail={"code": exc.code, "message": str(exc)})
        registry.add(session)
        return {"session_id": session.session_id, "state_hash": session.state_hash()}

    @app.get("/api/sessions/{session_id}/overview")
    def overview(session_id: str) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            table = session.table()
            try:
                fitness = learner_fitness(
                    list(table.per_learner_probs()), session.shots
                )
            except FsdiagError:
                fitness = None
            learners = []
            ens_probs = None
            if session.selected_indices():
                ens_probs = table.ensemble_probs()
            for k, state in enumerate(session.learners):
                entry: dict[str, Any] = {
                    "id": state.learner_id,
                    "selected": state.selected,
                    "weight": state.weight,
                    "fitness": float(fitness[k]) if fitness is not None else None,
                    "overall_diff": None,
                }
                if ens_probs is not None:
                    bd = diagnostics.agreement_breakdown(
                        table.per_learner_probs()[k], ens_probs, state.learner_id
                    )
                    entry["overall_diff"] = bd.overall_diff
                learners.append(entry)
            return {
                "session_id": session_id,
                "state_hash": session.state_hash(),
                "num_samples": session.num_samples,
                "classes": list(session.manifest.class_names),
                "learners": learners,
                "shots": [
                    {"sample": s, "class": c} for s, c in sorted(session.shots.entries)
                ],
                "accuracy": session.accuracy(),
            }

    @app.post("/api/sessions/{session_id}/recommend/learners")
    def rec_learners(session_id: str, req: RecommendLearnersRequest) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            state_hash = session.state_hash()
            try:
                rec = recommend_learners(
                    session,
                    ratio=req.ratio,
                    seed=req.seed,
                    config=_recommend_config(req.config),
                )
            except FsdiagError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "state_hash": state_hash,
                "selected_learner_ids": rec.selected_learner_ids,
                "objective": rec.objective,
                "per_learner": rec.per_learner,
                "diversity_before": rec.diversity_before,
                "diversity_after": rec.diversity_after,
                "cooperation_before": rec.cooperation_before,
                "cooperation_after": rec.cooperation_after,
                "seed": rec.seed,
                "ratio": rec.ratio,
                "converged": rec.converged,
            }

    @app.post("/api/sessions/{session_id}/recommend/shots")
    def rec_shots(session_id: str, req: RecommendShotsRequest) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            state_hash = session.state_hash()
            try:
                rec = recommend_shots(
                    session,
                    budget=req.budget,
                    ratio=req.ratio,
                    seed=req.seed,
                    config=_recommend_config(req.config),
                )
            except FsdiagError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "state_hash": state_hash,
                "recommended_sample_indices": rec.recommended_sample_indices,
                "to_add": rec.to_add,
                "to_remove": rec.to_remove,
                "objective": rec.objective,
                "budget": rec.budget,
                "seed": rec.seed,
                "ratio": rec.ratio,
                "converged": rec.converged,
            }

    @app.post("/api/sessions/{session_id}/edits")
    def apply_edit(session_id: str, req: EditRequest) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            guard_hash(session, req.state_hash)
            try:
                cmd = EditCommand.from_dict(req.command)
                return session.apply_edit(cmd)
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})

    @app.post("/api/sessions/{session_id}/weight-adjust")
    def weight_adjust(session_id: str, req: WeightAdjustRequest) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            guard_hash(session, req.state_hash)
            try:
                adj = diagnostics.adjust_weight(
                    session, req.learner_id, req.direction, req.selection
                )
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "learner_id": adj.learner_id,
                "old_weight": adj.old_weight,
                "new_weight": adj.new_weight,
                "objective_before": adj.objective_before,
                "objective_after": adj.objective_after,
                "improved": adj.improved,
                "state_hash": session.state_hash(),
            }

    @app.get("/api/sessions/{session_id}/agreement")
    def agreement(session_id: str) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            table = session.table()
            try:
                ens = table.ensemble_probs()
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            out = []
            for k in session.selected_indices():
                state = session.learners[k]
                bd = diagnostics.agreement_breakdown(
                    table.per_learner_probs()[k], ens, state.learner_id
                )
                out.append(
                    {
                        "learner_id": bd.learner_id,
                        "overall_diff": bd.overall_diff,
                        "per_class": bd.per_class,
                    }
                )
            return {"state_hash": session.state_hash(), "learners": out}

    @app.get("/api/sessions/{session_id}/histogram")
    def histogram(
        session_id: str,
        learner: str = Query(...),
        class_index: int = Query(..., alias="class"),
    ) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            table = session.table()
            k = session.bundle.learner_ids.index(learner)
            try:
                ens = table.ensemble_probs()
                ens_margins = table.ensemble_margins()
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "state_hash": session.state_hash(),
                "learner": diagnostics.confidence_histogram(
                    table.per_learner_probs()[k],
                    table.per_learner_margins()[k],
                    class_index,
                ),
                "ensemble": diagnostics.confidence_histogram(
                    ens, ens_margins, class_index
                ),
            }

    @app.get("/api/sessions/{session_id}/influence")
    def influence(session_id: str, learner: str = Query(...)) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            try:
                rep = diagnostics.learner_influence(session, learner)
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "state_hash": session.state_hash(),
                "learner_id": rep.learner_id,
                "deltas": [float(d) for d in rep.deltas],
                "up": rep.up,
                "down": rep.down,
            }

    @app.get("/api/sessions/{session_id}/coverage")
    def coverage(session_id: str, shot: int = Query(...), k: int = Query(20)) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            try:
                rep = diagnostics.shot_coverage(session, shot, k_cov=k)
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "state_hash": session.state_hash(),
                "shot": rep.shot_index,
                "neighbors": [
                    {"sample": s, "similarity": sim} for s, sim in rep.neighbors
                ],
            }

    @app.get("/api/sessions/{session_id}/projection")
    def projection(
        session_id: str,
        ratio: float = Query(DEFAULT_RATIO),
        seed: int = Query(0),
    ) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            try:
                plan = sample_subset(session.num_samples, session.shots, ratio, seed)
                proj = diagnostics.project_samples(session, plan, seed)
                table = session.table()
                ens = table.ensemble_probs()
                margins = table.ensemble_margins()
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            args = ens.argmax(axis=1)
            samples = []
            for j, idx in enumerate(proj.indices):
                idx = int(idx)
                samples.append(
                    {
                        "sample": idx,
                        "x": float(proj.coords[j, 0]),
                        "y": float(proj.coords[j, 1]),
                        "class": int(args[idx]),
                        "margin": float(margins[idx]),
                        "is_shot": idx in session.shots,
                    }
                )
            return {
                "state_hash": session.state_hash(),
                "seed": proj.seed,
                "method": proj.method,
                "samples": samples,
            }

    @app.get("/api/sessions/{session_id}/clusters")
    def clusters(
        session_id: str, kind: str = Query(...), count: int = Query(...)
    ) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            try:
                if kind == "learners":
                    idx = session.selected_indices() or list(
                        range(len(session.learners))
                    )
                    probs = session.table().per_learner_probs()
                    ids = [session.learners[i].learner_id for i in idx]
                    if len(idx) >= 2:
                        mu = pairwise_cooperation([probs[i] for i in idx])
                    else:
                        mu = np.zeros((1, 1))
                    tree = diagnostics.cluster_learners(mu, ids, count)
                elif kind == "classes":
                    tree = diagnostics.cluster_classes(session, count)
                else:
                    raise HTTPException(422, detail=f"bad kind {kind!r}")
            except SessionError as exc:
                raise HTTPException(409, detail={"code": exc.code, "message": str(exc)})
            return {
                "state_hash": session.state_hash(),
                "kind": tree.kind,
                "items": tree.item_ids,
                "merges": tree.merges,
                "labels": tree.labels,
                "count": tree.target_count,
            }

    @app.get("/api/sessions/{session_id}/samples/{idx}")
    def sample_detail(session_id: str, idx: int) -> dict:
        session, lock = registry.get(session_id)
        with lock:
            if not 0 <= idx < session.num_samples:
                raise HTTPException(404, detail=f"sample {idx} out of range")
            table = session.table()
            per_learner = {}
            for k in session.selected_indices():
                state = session.learners[k]
                per_learner[state.learner_id] = [
                    float(p) for p in table.per_learner_probs()[k][idx]
                ]
            ens = None
            try:
                ens = [float(p) for p in table.ensemble_probs()[idx]]
            except SessionError:
                pass
            image_path = None
            if session.manifest.image_dir is not None:
                image_path = str(session.manifest.image_dir / f"{idx}.png")
            return {
                "state_hash": session.state_hash(),
                "sample": idx,
                "ensemble": ens,
                "per_learner": per_learner,
                "is_shot": idx in session.shots,
                "shot_class": session.shots.class_of(idx)
                if idx in session.shots
                else None,
                "image": image_path,
            }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
