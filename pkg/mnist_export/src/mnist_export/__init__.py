"""Train a small digit classifier and export its final layer plus
per-class penultimate features in the shared text formats."""

from .corpus import DatasetMissingError, load_dataset, make_digits_corpus
from .export import (
    ACCURACY_TARGET,
    DEFAULT_SEED,
    AccuracyError,
    ExportBundle,
    train_and_export,
    write_dense_weights,
    write_feature_file,
)
from .idx import IdxFormatError, read_idx, read_images, read_labels, write_idx
from .model import DigitNet, evaluate, penultimate_features, train_model

__all__ = [
    "ACCURACY_TARGET",
    "AccuracyError",
    "DEFAULT_SEED",
    "DatasetMissingError",
    "DigitNet",
    "ExportBundle",
    "IdxFormatError",
    "evaluate",
    "load_dataset",
    "make_digits_corpus",
    "penultimate_features",
    "read_idx",
    "read_images",
    "read_labels",
    "train_and_export",
    "train_model",
    "write_dense_weights",
    "write_feature_file",
    "write_idx",
]

__version__ = "0.1.0"
