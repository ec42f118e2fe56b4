import numpy as np
import pytest

from src.classify.knn import knn_fit, knn_neighbors, knn_predict, knn_scores
from src.core.errors import ClassifierError


class TestKnn:
    def test_stored_vector_recovers_label_with_k1(self, rng):
        X = rng.standard_normal((10, 4))
        y = np.where(rng.random(10) > 0.5, 1, -1)
        model = knn_fit(X, y, k=1)
        for x, label in zip(X, y):
            assert knn_predict(model, x)[0] == label

    def test_k_equals_store_is_majority(self, rng):
        X = rng.standard_normal((5, 3))
        model = knn_fit(X, np.array([1, 1, 1, -1, -1]), k=5)
        assert knn_predict(model, rng.standard_normal(3))[0] == 1

    def test_neighbour_ids_nearest_first(self):
        X = np.array([[0.0], [1.0], [5.0]])
        model = knn_fit(X, np.array([-1, 1, 1]), ids=["a", "b", "c"], k=3)
        label, ids = knn_predict(model, np.array([0.9]))
        assert ids == ["b", "a", "c"]
        assert label == 1

    def test_distance_ties_prefer_lower_row(self):
        X = np.array([[1.0], [-1.0], [1.0]])
        model = knn_fit(X, np.array([1, -1, -1]), k=1)
        assert list(knn_neighbors(model, np.array([[0.0]]))[0]) == [0]

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        X = rng.random((200, 1044))
        y = np.where(rng.random(200) > 0.5, 1, -1)
        Q = rng.random((100, 1044))
        model = knn_fit(X, y, k=5)
        found = knn_neighbors(model, Q)
        for q, row in zip(Q, found):
            d = np.sqrt(((X - q) ** 2).sum(axis=1))
            expected = sorted(range(200), key=lambda i: (d[i], i))[:5]
            assert list(row) == expected
            assert knn_predict(model, q)[0] == (1 if y[expected].sum() > 0 else -1)

    def test_scores_are_vote_sums(self, rng):
        X = rng.standard_normal((9, 2))
        y = np.array([1, 1, 1, 1, -1, -1, -1, -1, -1])
        model = knn_fit(X, y, k=9)
        np.testing.assert_array_equal(knn_scores(model, rng.standard_normal((3, 2))), [-1.0, -1.0, -1.0])

    def test_flipped_labels_flip_predictions(self, rng):
        X = rng.standard_normal((15, 3))
        y = np.where(rng.random(15) > 0.5, 1, -1)
        a, b = knn_fit(X, y, k=3), knn_fit(X, -y, k=3)
        for q in rng.standard_normal((10, 3)):
            assert knn_predict(a, q)[0] == -knn_predict(b, q)[0]


class TestKnnErrors:
    def test_even_k(self, rng):
        with pytest.raises(ClassifierError):
            knn_fit(rng.random((5, 2)), np.ones(5), k=2)

    def test_k_larger_than_store(self, rng):
        with pytest.raises(ClassifierError):
            knn_fit(rng.random((3, 2)), np.ones(3), k=5)

    def test_empty_store(self):
        with pytest.raises(ClassifierError):
            knn_fit(np.zeros((0, 3)), np.zeros(0), k=1)

    def test_dimension_mismatch(self, rng):
        model = knn_fit(rng.random((3, 2)), np.array([1, -1, 1]), k=1)
        with pytest.raises(ClassifierError):
            knn_predict(model, np.ones(3))
