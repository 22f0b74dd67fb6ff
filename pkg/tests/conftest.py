import json

import numpy as np
import pytest

from fsdiag.session import EditCommand, SessionState
from fsdiag.store import load_manifest, write_feature_file
from fsdiag.synthetic import bundle_from_pool, generate_pool


def select_all(session):
    for st in session.learners:
        session.apply_edit(
            EditCommand(kind="set_learner", learner_id=st.learner_id, selected=True)
        )
    return session


@pytest.fixture
def tiny_dataset(tmp_path):
    """Hand-built on-disk dataset: 6 samples, 2 learners, 3 classes."""
    rng = np.random.default_rng(7)
    n, c = 6, 3
    feats = {}
    for lid, dim in (("alpha", 4), ("beta", 3)):
        m = rng.normal(size=(n, dim)).astype(np.float32)
        write_feature_file(tmp_path / f"{lid}.f32", m)
        feats[lid] = m
    with (tmp_path / "gt.csv").open("w") as fh:
        fh.write("sample,class\n")
        for i in range(n):
            fh.write(f"{i},{i % c}\n")
    manifest = {
        "version": 1,
        "num_samples": n,
        "classes": ["c0", "c1", "c2"],
        "learners": [
            {"id": "alpha", "features": "alpha.f32", "dim": 4},
            {"id": "beta", "features": "beta.f32", "dim": 3},
        ],
        "shots": [{"sample": 0, "class": 0}, {"sample": 1, "class": 1}, {"sample": 2, "class": 2}],
        "ground_truth": "gt.csv",
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path, feats


@pytest.fixture(scope="session")
def small_pool():
    return generate_pool(seed=11, n_samples=120, n_learners=8, n_corrupted=2)


@pytest.fixture
def small_session(small_pool):
    return select_all(SessionState(bundle_from_pool(small_pool), base_seed=3))


@pytest.fixture
def tiny_session(tiny_dataset):
    path, _ = tiny_dataset
    from fsdiag.session import validate_session_inputs

    return select_all(validate_session_inputs(load_manifest(path), base_seed=1))
