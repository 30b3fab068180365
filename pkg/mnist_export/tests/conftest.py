"""Session-wide fixtures: one corpus, one trained export, reused everywhere."""

import pytest

from mnist_export import DEFAULT_SEED, make_digits_corpus, train_and_export


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    make_digits_corpus(root, seed=0)
    return root


@pytest.fixture(scope="session")
def export(corpus_dir, tmp_path_factory):
    """(bundle, weights_path, features_path) for the default seed."""
    out = tmp_path_factory.mktemp("export")
    weights = out / "export.weights"
    features = out / "export.features"
    bundle = train_and_export(corpus_dir, weights, features, seed=DEFAULT_SEED)
    return bundle, weights, features
