import json
import struct

import numpy as np
import pytest

from fsdiag.errors import FeatureFileError, ManifestError
from fsdiag.store import (
    LearnerEntry,
    ShotSet,
    load_feature_matrix,
    load_manifest,
    load_raw_features,
    write_feature_file,
)


def _write(path, payload: bytes):
    path.write_bytes(payload)
    return path


def test_manifest_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for k in range(2):
        write_feature_file(tmp_path / f"l{k}.f32", rng.normal(size=(100, 8)))
    manifest = {
        "version": 1,
        "num_samples": 100,
        "classes": [f"c{i}" for i in range(5)],
        "learners": [
            {"id": f"l{k}", "features": f"l{k}.f32", "dim": 8} for k in range(2)
        ],
        "shots": [{"sample": i, "class": i % 5} for i in range(10)],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    m = load_manifest(path)
    assert len(m.learner_entries) == 2
    assert m.num_samples == 100
    assert m.class_names == tuple(f"c{i}" for i in range(5))
    assert len(m.shot_entries) == 10


def _base_manifest(tmp_path, **overrides):
    rng = np.random.default_rng(1)
    write_feature_file(tmp_path / "l0.f32", rng.normal(size=(10, 4)))
    manifest = {
        "version": 1,
        "num_samples": 10,
        "classes": ["a", "b"],
        "learners": [{"id": "l0", "features": "l0.f32", "dim": 4}],
        "shots": [{"sample": 0, "class": 0}],
    }
    manifest.update(overrides)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    return path


def test_dim_mismatch_rejected(tmp_path):
    path = _base_manifest(
        tmp_path, learners=[{"id": "l0", "features": "l0.f32", "dim": 64}]
    )
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "dim_mismatch"
    assert "l0" in str(err.value)


def test_shot_sample_out_of_range(tmp_path):
    path = _base_manifest(tmp_path, shots=[{"sample": 10, "class": 0}])
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "shot_sample_out_of_range"


def test_shot_class_out_of_range(tmp_path):
    path = _base_manifest(tmp_path, shots=[{"sample": 0, "class": 2}])
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "shot_class_out_of_range"


def test_duplicate_learner_id(tmp_path):
    path = _base_manifest(
        tmp_path,
        learners=[
            {"id": "l0", "features": "l0.f32", "dim": 4},
            {"id": "l0", "features": "l0.f32", "dim": 4},
        ],
    )
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "duplicate_learner_id"


def test_duplicate_shot_sample(tmp_path):
    path = _base_manifest(
        tmp_path, shots=[{"sample": 0, "class": 0}, {"sample": 0, "class": 1}]
    )
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "duplicate_shot_sample"


def test_missing_feature_file(tmp_path):
    path = _base_manifest(
        tmp_path, learners=[{"id": "l1", "features": "nope.f32", "dim": 4}]
    )
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "missing_file"


def test_feature_normalization_values(tmp_path):
    # rows (3,4) and (0,5) normalize to (0.6,0.8) and (0,1)
    write_feature_file(tmp_path / "f.f32", np.array([[3.0, 4.0], [0.0, 5.0]]))
    fm = load_feature_matrix(LearnerEntry("x", tmp_path / "f.f32", 2))
    assert fm.rows == 2 and fm.cols == 2
    np.testing.assert_allclose(fm.data, [[0.6, 0.8], [0.0, 1.0]], atol=1e-7)


def test_bad_magic(tmp_path):
    payload = b"XXXX" + struct.pack("<II", 1, 1) + struct.pack("<f", 1.0)
    path = _write(tmp_path / "bad.f32", payload)
    with pytest.raises(FeatureFileError) as err:
        load_raw_features(path)
    assert err.value.code == "bad_magic"


def test_truncated_payload(tmp_path):
    payload = b"FSD1" + struct.pack("<II", 2, 2) + struct.pack("<fff", 1, 2, 3)
    path = _write(tmp_path / "short.f32", payload)
    with pytest.raises(FeatureFileError) as err:
        load_raw_features(path)
    assert err.value.code == "truncated_payload"


def test_zero_row_rejected(tmp_path):
    write_feature_file(tmp_path / "z.f32", np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(FeatureFileError) as err:
        load_feature_matrix(LearnerEntry("z", tmp_path / "z.f32", 2))
    assert err.value.code == "zero_row"


def test_load_then_reserialize_byte_identical(tmp_path):
    rng = np.random.default_rng(5)
    original = tmp_path / "o.f32"
    write_feature_file(original, rng.normal(size=(17, 9)).astype(np.float32))
    raw = load_raw_features(original)
    copy = tmp_path / "c.f32"
    write_feature_file(copy, raw)
    assert original.read_bytes() == copy.read_bytes()


def test_rows_unit_norm_after_load(tmp_path):
    rng = np.random.default_rng(6)
    write_feature_file(tmp_path / "n.f32", rng.normal(size=(50, 12)) * 10)
    fm = load_feature_matrix(LearnerEntry("n", tmp_path / "n.f32", 12))
    norms = np.linalg.norm(fm.data, axis=1)
    assert np.abs(norms - 1.0).max() < 1e-6


def test_shotset_lookup():
    shots = ShotSet([(3, 1), (5, 0), (9, 1)])
    assert len(shots) == 3
    assert 3 in shots and 4 not in shots
    assert shots.class_of(5) == 0
    assert shots.samples_of_class(1) == [3, 9]
    assert shots.classes_with_shots() == [0, 1]


def test_shotset_duplicate_sample():
    with pytest.raises(ManifestError):
        ShotSet([(1, 0), (1, 1)])


def test_unknown_manifest_key_rejected(tmp_path):
    path = _base_manifest(tmp_path, extra_key=1)
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert err.value.code == "parse_error"
