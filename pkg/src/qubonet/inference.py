"""Consensus classification from samples, and confusion tables.

A prediction is read off a :class:`~qubonet.qubo.SampleSet` by keeping
the k lowest-energy samples (occurrence-expanded, ties broken by the
sample set's lexicographic ordering), averaging each class node's bit
over them, and taking the argmax.  Tables report these averages on a
0-100 scale, rounded half-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .build import ModelLayout
from .errors import DimensionError
from .nn import LabeledImage
from .qubo import SampleSet

#: Paper-convention consensus size and read count.
DEFAULT_RETAINED = 100
DEFAULT_READS = 1000


@dataclass(frozen=True)
class ClassScores:
    """Mean class-node activations over the retained low-energy samples."""

    per_class: np.ndarray
    retained: int
    total_reads: int

    def __post_init__(self):
        per_class = np.asarray(self.per_class, dtype=float)
        if per_class.ndim != 1 or per_class.size == 0:
            raise DimensionError("per_class must be a non-empty vector")
        if per_class.min() < 0.0 or per_class.max() > 1.0:
            raise ValueError("class scores must lie in [0, 1]")
        if not 1 <= self.retained <= self.total_reads:
            raise ValueError(
                f"retained must lie in 1..total_reads, got {self.retained} of {self.total_reads}"
            )
        per_class.setflags(write=False)
        object.__setattr__(self, "per_class", per_class)

    @property
    def n_classes(self) -> int:
        return self.per_class.size


@dataclass(frozen=True)
class ConfusionTable:
    """Paper-scale consensus per input class (rows) and predicted class
    (columns); entries are integers in 0..100."""

    row_labels: tuple[int, ...]
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=int)
        if scores.ndim != 2 or scores.shape[0] != len(self.row_labels):
            raise DimensionError("need one row of scores per row label")
        if scores.size and (scores.min() < 0 or scores.max() > 100):
            raise ValueError("paper-scale entries must lie in 0..100")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n_classes(self) -> int:
        return self.scores.shape[1]

    def diagonal_dominant_rows(self) -> list[int]:
        """Row labels whose own-class column holds the row argmax."""
        return [
            label
            for label, row in zip(self.row_labels, self.scores)
            if int(np.argmax(row)) == label
        ]


def paper_scale(score: float) -> int:
    """A [0,1] score on the 0-100 table convention, rounded half-up."""
    return int(math.floor(100.0 * score + 0.5))


def consensus(samples: SampleSet, layout: ModelLayout, k: int = DEFAULT_RETAINED) -> ClassScores:
    """Average the class bits of the k lowest-energy samples.

    Occurrences are expanded first, so a state sampled r times counts r
    times; the sample set's (energy, state) ordering fixes which samples
    make the cut when energies tie at the boundary.
    """
    if not 1 <= k <= samples.reads:
        raise ValueError(f"k must lie in 1..{samples.reads}, got {k}")
    if layout.n != samples.n:
        raise DimensionError(
            f"layout describes {layout.n} nodes but samples have {samples.n}"
        )
    retained = samples.expanded()[:k]
    span = layout.classes
    return ClassScores(retained[:, span.start : span.stop].mean(axis=0), k, samples.reads)


def predict(scores: ClassScores | Sequence[float]) -> int:
    """Predicted class: argmax with lowest-index tie-breaking."""
    per_class = scores.per_class if isinstance(scores, ClassScores) else np.asarray(scores)
    if per_class.size == 0:
        raise ValueError("cannot predict from empty scores")
    return int(np.argmax(per_class))


def confusion(
    dataset: Sequence[LabeledImage],
    scorer: Callable[[LabeledImage], ClassScores],
    n_classes: int,
) -> ConfusionTable:
    """Score every input and tabulate paper-scale consensus by true class.

    Rows are the distinct input labels in ascending order; when a label
    occurs on several inputs the scores are averaged before scaling.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    by_label: dict[int, list[np.ndarray]] = {}
    for image in dataset:
        scores = scorer(image)
        if scores.n_classes != n_classes:
            raise DimensionError(
                f"scorer returned {scores.n_classes} classes, expected {n_classes}"
            )
        by_label.setdefault(image.label, []).append(scores.per_class)
    labels = tuple(sorted(by_label))
    table = np.zeros((len(labels), n_classes), dtype=int)
    for row, label in enumerate(labels):
        mean = np.mean(by_label[label], axis=0)
        table[row] = [paper_scale(v) for v in mean]
    return ConfusionTable(labels, table)


def format_scores(scores: ClassScores) -> str:
    """One line per class: index, mean activation, paper-scale value."""
    lines = [
        f"{k} {value:.6f} {paper_scale(value)}"
        for k, value in enumerate(scores.per_class)
    ]
    return "\n".join(lines) + "\n"


def render_table(table: ConfusionTable) -> str:
    """Aligned text table with input labels down the side."""
    width = max(5, len(str(table.n_classes - 1)) + 1)
    header = "input" + "".join(f"{k:>{width}}" for k in range(table.n_classes))
    lines = [header]
    for label, row in zip(table.row_labels, table.scores):
        lines.append(f"{label:>5}" + "".join(f"{v:>{width}}" for v in row))
    return "\n".join(lines) + "\n"


def render_table_csv(table: ConfusionTable) -> str:
    header = "input," + ",".join(str(k) for k in range(table.n_classes))
    lines = [header]
    for label, row in zip(table.row_labels, table.scores):
        lines.append(f"{label}," + ",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"
