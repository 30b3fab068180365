"""Classically trained networks as QUBO energy models, classified by sampling."""

from .build import (
    BuildParams,
    ModelLayout,
    assemble,
    assemble_scaled,
    normalize_features,
    read_layout,
    write_layout,
)
from .estimator import QuboNetClassifier, score_features, score_image
from .inference import ClassScores, ConfusionTable, confusion, consensus, predict
from .nn import (
    LabeledImage,
    LayerGeometry,
    NetworkWeights,
    forward,
    glyph_images,
    read_weights,
    train,
    write_weights,
)
from .qubo import (
    Qubo,
    SampleSet,
    boltzmann_distribution,
    energy,
    read_qubo,
    read_sampleset,
    write_qubo,
    write_sampleset,
)
from .samplers import SamplerConfig, get_sampler, sample_anneal, sample_exact, sample_gibbs

__version__ = "0.1.0"

__all__ = [
    "BuildParams",
    "ClassScores",
    "ConfusionTable",
    "LabeledImage",
    "LayerGeometry",
    "ModelLayout",
    "NetworkWeights",
    "Qubo",
    "QuboNetClassifier",
    "SampleSet",
    "SamplerConfig",
    "assemble",
    "assemble_scaled",
    "boltzmann_distribution",
    "confusion",
    "consensus",
    "energy",
    "forward",
    "get_sampler",
    "glyph_images",
    "normalize_features",
    "predict",
    "read_layout",
    "read_qubo",
    "read_sampleset",
    "read_weights",
    "sample_anneal",
    "sample_exact",
    "sample_gibbs",
    "score_features",
    "score_image",
    "train",
    "write_layout",
    "write_qubo",
    "write_sampleset",
    "write_weights",
    "__version__",
]
