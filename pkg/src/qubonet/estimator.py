"""Scikit-learn estimator wrapping the train / build / sample / consensus
pipeline, plus the two scoring helpers the CLI shares.

``QuboNetClassifier.fit`` trains the small CNN on flattened square
images; ``predict`` runs each image through the QUBO transfer and reads
the class off the low-energy consensus.  The sampler backends replace
annealing hardware, so predictions are seeded and reproducible.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .build import BuildParams, assemble, normalize_features
from .inference import DEFAULT_READS, DEFAULT_RETAINED, ClassScores, consensus, predict
from .nn import LabeledImage, NetworkWeights, forward, train
from .samplers import SamplerConfig, get_sampler


def score_image(
    image: LabeledImage,
    weights: NetworkWeights,
    params: BuildParams = BuildParams(),
    config: SamplerConfig = SamplerConfig(),
    backend: str = "anneal",
    k: int = DEFAULT_RETAINED,
) -> ClassScores:
    """Consensus scores for one image: forward pass, normalize the conv
    features into [-alpha, alpha], assemble, sample, average."""
    result = forward(weights, image)
    return score_features(result.conv_features, weights, params, config, backend, k)


def score_features(
    raw_features,
    weights: NetworkWeights,
    params: BuildParams = BuildParams(),
    config: SamplerConfig = SamplerConfig(),
    backend: str = "anneal",
    k: int = DEFAULT_RETAINED,
) -> ClassScores:
    """Consensus scores from raw feature values and network weights."""
    features, mapping = normalize_features(raw_features, params.alpha)
    qubo, layout = assemble(features, weights, params, norm=mapping)
    samples = get_sampler(backend)(qubo, config)
    return consensus(samples, layout, k)


class QuboNetClassifier(BaseEstimator, ClassifierMixin):
    """Classifier that samples a QUBO instead of running softmax.

    fit() trains the convolutional network classically; predict() builds
    one QUBO per input from the trained weights and the input's conv
    features, draws ``reads`` samples with the chosen backend, keeps the
    ``retained`` lowest-energy ones and takes the argmax of the mean
    class-node activations.

    Parameters mirror BuildParams (alpha, penalty, clamp_mode),
    SamplerConfig (reads, sweeps, beta_start, beta_end) and the trainer
    (epochs, learning_rate); ``random_state`` seeds both training and
    sampling.
    """

    def __init__(
        self,
        alpha: float = 1.0,
        penalty: float | None = None,
        clamp_mode: str = "free",
        backend: str = "anneal",
        reads: int = DEFAULT_READS,
        retained: int = DEFAULT_RETAINED,
        sweeps: int = 1000,
        beta_start: float = 0.1,
        beta_end: float = 5.0,
        epochs: int = 2000,
        learning_rate: float = 0.5,
        random_state: int = 0,
    ):
        self.alpha = alpha
        self.penalty = penalty
        self.clamp_mode = clamp_mode
        self.backend = backend
        self.reads = reads
        self.retained = retained
        self.sweeps = sweeps
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _build_params(self) -> BuildParams:
        return BuildParams(alpha=self.alpha, penalty=self.penalty, clamp_mode=self.clamp_mode)

    def _sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            reads=self.reads,
            sweeps=self.sweeps,
            beta_start=self.beta_start,
            beta_end=self.beta_end,
            seed=self.random_state,
        )

    def _images(self, X, labels=None):
        side = self.image_side_
        rows = []
        for row_index, row in enumerate(X):
            label = 0 if labels is None else int(labels[row_index])
            rows.append(LabeledImage(row.reshape(side, side), label))
        return rows

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        side = int(round(np.sqrt(X.shape[1])))
        if side * side != X.shape[1]:
            raise ValueError(
                f"expected flattened square images, got {X.shape[1]} features"
            )
        self.classes_, encoded = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        self.image_side_ = side
        images = self._images(X, encoded)
        self.weights_ = train(
            images,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self.random_state,
        )
        return self

    def decision_function(self, X):
        """Consensus scores, one [0,1] row per input and column per class."""
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        params = self._build_params()
        config = self._sampler_config()
        scores = [
            score_image(
                image, self.weights_, params, config, self.backend, self.retained
            ).per_class
            for image in self._images(X)
        ]
        return np.array(scores)

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[scores.argmax(axis=1)]
