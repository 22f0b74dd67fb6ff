import numpy as np
import pytest

from fsdiag import ensemble
from fsdiag.errors import SessionError
from fsdiag.store import FeatureMatrix, ShotSet


def _fm(rows):
    data = np.asarray(rows, dtype=np.float64)
    data = data / np.linalg.norm(data, axis=1, keepdims=True)
    return FeatureMatrix(rows=data.shape[0], cols=data.shape[1], data=data)


def test_prototype_single_shot_equals_row():
    fm = _fm([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    protos = ensemble.class_prototypes(fm, ShotSet([(0, 0)]))
    np.testing.assert_allclose(protos[0], fm.data[0])
    assert set(protos) == {0}


def test_prototype_is_normalized_mean():
    fm = _fm([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    protos = ensemble.class_prototypes(fm, ShotSet([(0, 1), (1, 1)]))
    expected = fm.data[0] + fm.data[1]
    expected /= np.linalg.norm(expected)
    np.testing.assert_allclose(protos[1], expected)


def test_class_without_shots_absent():
    fm = _fm([[1.0, 0.0], [0.0, 1.0]])
    protos = ensemble.class_prototypes(fm, ShotSet([(0, 2)]))
    assert 0 not in protos and 1 not in protos and 2 in protos


def test_single_class_predictions_one_hot():
    fm = _fm(np.random.default_rng(0).normal(size=(5, 3)))
    protos = ensemble.class_prototypes(fm, ShotSet([(0, 1)]))
    probs = ensemble.learner_predict(fm, protos, num_classes=4)
    assert probs.shape == (5, 4)
    np.testing.assert_allclose(probs[:, 1], 1.0)
    assert probs[:, [0, 2, 3]].max() == 0.0


def test_equidistant_sample_splits_evenly():
    fm = _fm([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    protos = ensemble.class_prototypes(fm, ShotSet([(0, 0), (1, 1)]))
    probs = ensemble.learner_predict(fm, protos, num_classes=2)
    np.testing.assert_allclose(probs[2], [0.5, 0.5], atol=1e-12)


def test_learner_predict_matches_scalar_oracle():
    # Independent scalar-loop recomputation of softmax(tau * cos).
    rng = np.random.default_rng(42)
    raw = rng.normal(size=(3, 4))
    fm = _fm(raw)
    shots = ShotSet([(0, 0), (1, 1)])
    tau = 10.0
    probs = ensemble.learner_predict(fm, ensemble.class_prototypes(fm, shots), 2, tau)
    for i in range(3):
        scores = []
        for c in (0, 1):
            proto = fm.data[shots.samples_of_class(c)[0]]
            scores.append(tau * float(np.dot(fm.data[i], proto)))
        exps = [np.exp(s - max(scores)) for s in scores]
        total = sum(exps)
        for c in (0, 1):
            assert probs[i, c] == pytest.approx(exps[c] / total, abs=1e-12)


def test_margin_confidence_values():
    assert ensemble.margin_confidence(np.array([0.7, 0.2, 0.1])) == pytest.approx(0.5)
    assert ensemble.margin_confidence(np.full(4, 0.25)) == pytest.approx(0.0)
    assert ensemble.margin_confidence(np.array([0.0, 1.0, 0.0])) == pytest.approx(1.0)
    assert ensemble.margin_confidence(np.array([1.0])) == 1.0


def test_margins_of_matches_rowwise():
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(5), size=20)
    m = ensemble.margins_of(probs)
    for i in range(20):
        assert m[i] == pytest.approx(ensemble.margin_confidence(probs[i]))


def test_ensemble_identity_single_learner():
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(3), size=10)
    out = ensemble.ensemble_predict([probs], [1.0])
    np.testing.assert_array_equal(out, probs)


def test_ensemble_identical_learners_fixed_point():
    rng = np.random.default_rng(2)
    probs = rng.dirichlet(np.ones(3), size=10)
    out = ensemble.ensemble_predict([probs, probs.copy()], [0.3, 2.7])
    np.testing.assert_allclose(out, probs, atol=1e-12)


def test_ensemble_average_of_disagreeing():
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.0, 1.0]])
    out = ensemble.ensemble_predict([a, b], [1.0, 1.0])
    np.testing.assert_allclose(out, [[0.5, 0.5]])


def test_ensemble_weight_scaling_invariance():
    rng = np.random.default_rng(4)
    mats = [rng.dirichlet(np.ones(4), size=8) for _ in range(3)]
    w = [0.5, 1.5, 2.0]
    base = ensemble.ensemble_predict(mats, w)
    scaled = ensemble.ensemble_predict(mats, [17.3 * x for x in w])
    np.testing.assert_allclose(base, scaled, atol=1e-9)


def test_ensemble_rejects_zero_weights():
    probs = np.array([[0.5, 0.5]])
    with pytest.raises(SessionError):
        ensemble.ensemble_predict([probs], [0.0])
    with pytest.raises(SessionError):
        ensemble.ensemble_predict([], [])


def test_temperature_limits():
    rng = np.random.default_rng(9)
    fm = _fm(rng.normal(size=(20, 6)))
    shots = ShotSet([(0, 0), (1, 1), (2, 2)])
    protos = ensemble.class_prototypes(fm, shots)
    hot = ensemble.learner_predict(fm, protos, 3, temperature=1000.0)
    sims = fm.data @ np.stack([protos[c] for c in range(3)]).T
    unique = np.abs(np.sort(sims, axis=1)[:, -1] - np.sort(sims, axis=1)[:, -2]) > 1e-3
    assert (hot[unique].max(axis=1) > 1.0 - 1e-3).all()
    # Deviation from uniform is Theta(tau * sim-spread): ~3e-3 at tau=0.01
    # for unit-vector features, so the cold end is checked at 1e-2.
    cold = ensemble.learner_predict(fm, protos, 3, temperature=0.01)
    assert np.abs(cold - 1.0 / 3).max() < 1e-2
    colder = ensemble.learner_predict(fm, protos, 3, temperature=0.001)
    assert np.abs(colder - 1.0 / 3).max() < 1e-3


def test_adding_ensemble_equal_learner_is_noop():
    rng = np.random.default_rng(5)
    mats = [rng.dirichlet(np.ones(3), size=6) for _ in range(2)]
    ens = ensemble.ensemble_predict(mats, [1.0, 1.0])
    with_extra = ensemble.ensemble_predict(mats + [ens], [1.0, 1.0, 5.0])
    np.testing.assert_allclose(with_extra, ens, atol=1e-9)


def test_accuracy_eval_counts():
    probs = np.zeros((10, 3))
    labels = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0])
    for i, c in enumerate(labels):
        probs[i, c] = 1.0
    assert ensemble.accuracy_eval(probs, labels) == 1.0
    wrong = np.roll(probs, 1, axis=1)
    assert ensemble.accuracy_eval(wrong, labels) == 0.0
    mixed = probs.copy()
    mixed[:3] = np.roll(probs[:3], 1, axis=1)
    assert ensemble.accuracy_eval(mixed, labels) == pytest.approx(0.7)


def test_accuracy_excludes_shots_and_unlabeled():
    probs = np.eye(3)[np.array([0, 1, 2, 0])]
    labels = np.array([0, 1, 2, -1])
    assert ensemble.accuracy_eval(probs, labels, exclude=[0]) == 1.0
    labels2 = np.array([1, 1, 2, -1])  # sample 0 wrong but excluded
    assert ensemble.accuracy_eval(probs, labels2, exclude=[0]) == 1.0


def test_accuracy_tie_breaks_to_lowest_class():
    probs = np.array([[0.5, 0.5, 0.0]])
    assert ensemble.accuracy_eval(probs, np.array([0])) == 1.0
    assert ensemble.accuracy_eval(probs, np.array([1])) == 0.0
