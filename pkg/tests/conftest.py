import numpy as np
import pytest

from votestack import Dataset, DatasetSchema, PredictionMatrix


def make_dataset(features, labels, n_classes=None):
    """Dataset wrapper around raw arrays with an auto-generated schema."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    schema = DatasetSchema(
        n_features=features.shape[1],
        feature_names=tuple(f"f{i}" for i in range(features.shape[1])),
        label_column=features.shape[1],
        n_classes=n_classes,
        class_names=tuple(f"c{i}" for i in range(n_classes)),
    )
    return Dataset(schema, features, labels)


def one_hot_pm(votes, n_classes):
    """PredictionMatrix whose rows are one-hot on the given votes.

    votes: (n_learners, n_samples) integer array.
    """
    votes = np.asarray(votes, dtype=np.int64)
    n, s = votes.shape
    probs = np.zeros((n, s, n_classes))
    for j in range(n):
        probs[j, np.arange(s), votes[j]] = 1.0
    return PredictionMatrix(probs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_pm(rng, n, s, c):
    """Valid random prediction matrix with Dirichlet rows."""
    return PredictionMatrix(rng.dirichlet(np.ones(c), size=(n, s)))
