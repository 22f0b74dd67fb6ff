"""Synthetic desk-scale pools for the evaluation harness and tests.

A pool is C Gaussian clusters in a base feature space observed by K
synthetic learners, each a random linear projection of the base features.
The good learners share a random projection core plus a per-learner
perturbation and rotation, modelling a pool of extractors trained on
overlapping data: they agree broadly but differ in their confidence
profiles. A configurable number of learners are corrupted by shuffling
their feature rows across samples, which destroys the feature-to-sample
correspondence: they fit the shots badly and inject noise into the
ensemble.

Shots are drawn per class; additionally a few planted off-cluster outlier
samples receive wrong labels, the classic low-quality shot (mislabeled and
covering nothing).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .store import DataBundle, FeatureMatrix, LearnerEntry, Manifest, ShotSet, write_feature_file


@dataclass
class SyntheticPool:
    features: np.ndarray  # (N, dim) raw base features
    labels: np.ndarray  # (N,) ground truth class per sample
    learner_features: list[np.ndarray]  # per learner (N, proj_dim), unit rows
    corrupted: list[int]  # learner indices with shuffled rows
    shots: list[tuple[int, int]]  # (sample, class) incl. mislabeled ones
    mislabeled_samples: list[int]  # sample indices of the planted bad shots
    num_classes: int

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    def learner_id(self, k: int) -> str:
        return f"learner-{k:02d}"

    @property
    def corrupted_ids(self) -> set[str]:
        return {self.learner_id(k) for k in self.corrupted}


def generate_pool(
    seed: int,
    n_samples: int = 500,
    n_classes: int = 5,
    dim: int = 32,
    proj_dim: int = 16,
    n_learners: int = 24,
    n_corrupted: int = 6,
    shots_per_class: int = 3,
    n_mislabeled: int = 2,
    center_scale: float = 5.0,
    noise: float = 1.0,
    core_mix: float = 0.5,
    outlier_scale: float = 3.0,
) -> SyntheticPool:
    rng = np.random.default_rng(seed)

    centers = rng.normal(size=(n_classes, dim))
    centers *= center_scale / np.linalg.norm(centers, axis=1, keepdims=True)

    labels = np.repeat(np.arange(n_classes), int(np.ceil(n_samples / n_classes)))[
        :n_samples
    ]
    rng.shuffle(labels)
    features = centers[labels] + noise * rng.normal(size=(n_samples, dim))

    # Plant outlier samples far off every cluster; they become the mislabeled
    # shots below.
    outlier_idx = rng.choice(n_samples, size=n_mislabeled, replace=False)
    for idx in outlier_idx:
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        features[idx] = direction * center_scale * outlier_scale + noise * rng.normal(
            size=dim
        )

    corrupted = sorted(rng.choice(n_learners, size=n_corrupted, replace=False).tolist())
    core = rng.normal(size=(dim, proj_dim)) / np.sqrt(dim)
    learner_features = []
    for k in range(n_learners):
        if k in corrupted:
            proj = rng.normal(size=(dim, proj_dim)) / np.sqrt(dim)
            mat = (features @ proj)[rng.permutation(n_samples)]
        else:
            pert = core_mix * rng.normal(size=(dim, proj_dim)) / np.sqrt(dim)
            rot, _ = np.linalg.qr(rng.normal(size=(proj_dim, proj_dim)))
            mat = features @ ((core + pert) @ rot)
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        learner_features.append(mat)

    shots: list[tuple[int, int]] = []
    taken = set(int(i) for i in outlier_idx)
    for c in range(n_classes):
        candidates = np.setdiff1d(np.flatnonzero(labels == c), list(taken))
        chosen = rng.choice(
            candidates, size=min(shots_per_class, candidates.size), replace=False
        )
        for s in chosen:
            shots.append((int(s), c))
            taken.add(int(s))
    for idx in outlier_idx:
        wrong = int(rng.integers(n_classes - 1))
        if wrong >= labels[idx]:
            wrong += 1
        shots.append((int(idx), wrong))

    return SyntheticPool(
        features=features,
        labels=labels,
        learner_features=learner_features,
        corrupted=corrupted,
        shots=shots,
        mislabeled_samples=sorted(int(i) for i in outlier_idx),
        num_classes=n_classes,
    )


def bundle_from_pool(pool: SyntheticPool, manifest_dir: Path | None = None) -> DataBundle:
    """Build an in-memory data bundle equivalent to loading the pool from disk."""
    base = Path(manifest_dir) if manifest_dir else Path(".")
    entries = []
    features = {}
    for k, mat in enumerate(pool.learner_features):
        lid = pool.learner_id(k)
        entries.append(LearnerEntry(lid, base / f"{lid}.f32", mat.shape[1]))
        features[lid] = FeatureMatrix(rows=mat.shape[0], cols=mat.shape[1], data=mat)
    manifest = Manifest(
        version=1,
        num_samples=pool.num_samples,
        class_names=tuple(f"class-{c}" for c in range(pool.num_classes)),
        learner_entries=tuple(entries),
        shot_entries=tuple(pool.shots),
    )
    return DataBundle(
        manifest=manifest,
        features=features,
        shots=ShotSet(pool.shots),
        ground_truth=pool.labels.copy(),
    )


def write_dataset(pool: SyntheticPool, out_dir) -> Path:
    """Write the pool to disk in the package's file formats; returns the
    manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    learners = []
    for k, mat in enumerate(pool.learner_features):
        lid = pool.learner_id(k)
        write_feature_file(out / f"{lid}.f32", mat)
        learners.append({"id": lid, "features": f"{lid}.f32", "dim": mat.shape[1]})
    with (out / "ground_truth.csv").open("w", encoding="utf-8") as fh:
        fh.write("sample,class\n")
        for i, c in enumerate(pool.labels):
            fh.write(f"{i},{int(c)}\n")
    manifest = {
        "version": 1,
        "num_samples": pool.num_samples,
        "classes": [f"class-{c}" for c in range(pool.num_classes)],
        "learners": learners,
        "shots": [{"sample": s, "class": c} for s, c in pool.shots],
        "ground_truth": "ground_truth.csv",
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path
