"""Locating and loading the digit corpus in the MNIST distribution layout.

`load_dataset` expects the four standard files (optionally gzipped)
under one directory.  When real MNIST is not on disk, `make_digits_corpus`
renders scikit-learn's bundled 8x8 digits into the same layout so the
rest of the pipeline runs unchanged.
"""

from pathlib import Path

import numpy as np

from .idx import read_images, read_labels, write_idx

FILE_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

DOWNLOAD_HINT = (
    "download the four MNIST files (train-images-idx3-ubyte, "
    "train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte, "
    "gzipped is fine) into that directory, or run `mnist-export make-corpus` "
    "to build a stand-in corpus from scikit-learn's bundled digits"
)


class DatasetMissingError(Exception):
    """The corpus directory lacks one of the four distribution files."""


def _locate(root: Path, name: str) -> Path:
    for candidate in (root / name, root / (name + ".gz")):
        if candidate.exists():
            return candidate
    raise DatasetMissingError(f"{root / name}(.gz) not found; {DOWNLOAD_HINT}")


def load_dataset(root) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (train_images, train_labels, test_images, test_labels).

    Images come back as float32 in [0, 1]; labels as int64.
    """
    root = Path(root)
    parts = {key: _locate(root, name) for key, name in FILE_NAMES.items()}
    train_x = read_images(parts["train_images"]).astype(np.float32) / 255.0
    train_y = read_labels(parts["train_labels"]).astype(np.int64)
    test_x = read_images(parts["test_images"]).astype(np.float32) / 255.0
    test_y = read_labels(parts["test_labels"]).astype(np.int64)
    if len(train_x) != len(train_y) or len(test_x) != len(test_y):
        raise DatasetMissingError(
            f"image/label counts disagree: {len(train_x)}/{len(train_y)} train, "
            f"{len(test_x)}/{len(test_y)} test"
        )
    return train_x, train_y, test_x, test_y


def make_digits_corpus(root, seed: int = 0, test_fraction: float = 0.2) -> dict:
    """Write scikit-learn's 8x8 digits to `root` in the MNIST layout.

    The 0..16 pixel range is rescaled to 0..255 and the seeded shuffle
    fixes the train/test split.  Returns the written counts.
    """
    from sklearn.datasets import load_digits

    digits = load_digits()
    images = np.round(digits.images * (255.0 / 16.0)).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    order = np.random.default_rng(seed).permutation(len(images))
    images, labels = images[order], labels[order]
    n_test = int(round(test_fraction * len(images)))
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_idx(root / FILE_NAMES["train_images"], images[n_test:])
    write_idx(root / FILE_NAMES["train_labels"], labels[n_test:])
    write_idx(root / FILE_NAMES["test_images"], images[:n_test])
    write_idx(root / FILE_NAMES["test_labels"], labels[:n_test])
    return {"train": len(images) - n_test, "test": n_test}
