import json

import numpy as np
import pytest

from src.classify.models import (
    ClassifierSpec, LabeledSet, from_signed, load_model, model_kind, predict, save_model, to_signed,
    train,
)
from src.core.config import RunConfig, load_config
from src.core.errors import ClassifierError, ModelFormatError


@pytest.fixture
def histograms():
    rng = np.random.default_rng(12)
    normal = rng.dirichlet(np.linspace(5, 1, 16), 15)
    abnormal = rng.dirichlet(np.linspace(1, 5, 16), 15)
    X = np.vstack([normal, abnormal])
    y = np.array([-1] * 15 + [1] * 15)
    return LabeledSet(X, y, tuple(f"c{i}" for i in range(30)))


SPECS = [
    ClassifierSpec("knn", k=3),
    ClassifierSpec("svm", kernel="bhat", c=100.0),
    ClassifierSpec("svm", kernel="isect", c=100.0),
    ClassifierSpec("svm", kernel="rbf", c=10.0, gamma=50.0),
    ClassifierSpec("mlp", epochs=50, seed=4),
]


class TestDispatch:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.kernel}")
    def test_train_predict(self, histograms, spec):
        model = train(histograms, spec)
        assert model_kind(model) == spec.kind
        labels, scores = predict(model, histograms.features)
        assert labels.shape == scores.shape == (30,)
        assert set(np.unique(labels)) <= {-1, 1}
        assert np.mean(labels == histograms.labels) >= 0.8

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.kernel}")
    def test_save_load_is_bit_faithful(self, tmp_path, histograms, spec):
        model = train(histograms, spec)
        back = load_model(save_model(model, tmp_path / "model.json"))
        queries = np.random.default_rng(0).dirichlet(np.ones(16), 10)
        a_labels, a_scores = predict(model, queries)
        b_labels, b_scores = predict(back, queries)
        np.testing.assert_array_equal(a_labels, b_labels)
        np.testing.assert_array_equal(a_scores, b_scores)

    def test_single_class_rejected(self, histograms):
        with pytest.raises(ClassifierError):
            train(histograms.take(np.arange(10)), ClassifierSpec("knn", k=1))


class TestLabeledSet:
    def test_label_conversion(self):
        np.testing.assert_array_equal(to_signed([0, 1, 1]), [-1, 1, 1])
        np.testing.assert_array_equal(from_signed([-1, 1]), [0, 1])

    def test_rejects_zero_one_labels(self):
        with pytest.raises(ClassifierError):
            LabeledSet(np.ones((2, 2)), np.array([0, 1]))

    def test_rejects_nan(self):
        with pytest.raises(ClassifierError):
            LabeledSet(np.array([[np.nan, 1.0]]), np.array([1]))

    def test_take_and_columns(self, histograms):
        sub = histograms.take([0, 20]).columns([1, 3])
        assert sub.ids == ("c0", "c20")
        assert sub.features.shape == (2, 2)
        assert sub.has_both_classes


class TestPersistence:
    def test_config_embedded(self, tmp_path, histograms):
        config = RunConfig.from_profile("optimized").with_overrides(classifier="knn", k=3)
        path = save_model(train(histograms, ClassifierSpec("knn")), tmp_path / "m.json", config)
        assert load_config(path) == config
        assert json.loads(path.read_text(encoding="utf-8"))["fingerprint"] == config.fingerprint()

    def test_garbage(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_wrong_format(self, tmp_path):
        path = tmp_path / "old.json"
        path.write_text(json.dumps({"format": 99, "kind": "knn", "model": {}}), encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "cut.json"
        path.write_text(json.dumps({"format": 1, "kind": "svm", "model": {"c": 1.0}}), encoding="utf-8")
        with pytest.raises(ModelFormatError):
            load_model(path)
