"""Sparse QUBO data model, energy function and text serialization.

A QUBO is the quadratic form over binary variables

    E(x) = sum_i q_ii x_i  +  sum_{i<j} q_ij x_i x_j

stored as an upper-triangular map from index pairs to coefficients.
Diagonal entries are biases, off-diagonal entries are couplings, and a
missing key is an implicit zero.  All operations here are pure; `Qubo`
and `SampleSet` are immutable after construction and safe to share
across threads.

Two line-oriented text formats are defined:

    qubo n=<N>                      samples n=<N> reads=<R>
    <i> <j> <value>                 <energy> <occurrences> <bitstring>
    ...                             ...

Coefficients are written with 17 significant digits so that a write/read
round trip is bit-exact for float64.  Bit position p of a bitstring
(left to right) is variable p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterator, Mapping

import numpy as np

from .errors import CapacityError, DimensionError, FormatError

#: Largest n for which exact (2^n) operations are allowed.
ENUMERATION_BOUND = 24


def _validate_terms(n: int, terms: Mapping[tuple[int, int], float]) -> dict:
    clean = {}
    for key, value in terms.items():
        i, j = key
        if not (0 <= i <= j < n):
            raise ValueError(f"term index {key} out of range for n={n}")
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient at {key}: {value!r}")
        clean[(int(i), int(j))] = float(value)
    return clean


@dataclass(frozen=True)
class Qubo:
    """Upper-triangular sparse quadratic form over ``n`` binary variables."""

    n: int
    terms: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"variable count must be non-negative, got {self.n}")
        object.__setattr__(self, "terms", _validate_terms(self.n, self.terms))

    def coefficient(self, i: int, j: int) -> float:
        """Coefficient for the ordered pair (i, j); zero when absent."""
        return self.terms.get((min(i, j), max(i, j)), 0.0)

    def __add__(self, other: "Qubo") -> "Qubo":
        """Term-wise sum of two quadratic forms over the same variables."""
        if self.n != other.n:
            raise DimensionError(f"cannot add Qubos with n={self.n} and n={other.n}")
        merged = dict(self.terms)
        for key, value in other.terms.items():
            merged[key] = merged.get(key, 0.0) + value
        return Qubo(self.n, merged)

    def embedded(self, n: int, offset: int) -> "Qubo":
        """This form re-indexed into a larger space, shifted by ``offset``."""
        if offset < 0 or offset + self.n > n:
            raise DimensionError(
                f"cannot embed {self.n} variables at offset {offset} into n={n}"
            )
        return Qubo(n, {(i + offset, j + offset): v for (i, j), v in self.terms.items()})

    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense symmetric coupling matrix and bias vector (float64).

        The matrix holds q_ij in both (i, j) and (j, i) with a zero
        diagonal, so that the energy change of setting bit i is
        ``bias[i] + adj[i] @ x``.
        """
        adj = np.zeros((self.n, self.n))
        bias = np.zeros(self.n)
        for (i, j), v in self.terms.items():
            if i == j:
                bias[i] = v
            else:
                adj[i, j] = v
                adj[j, i] = v
        return adj, bias


def energy(qubo: Qubo, state) -> float:
    """Energy of one binary state.

    Parameters
    ----------
    qubo : Qubo
    state : sequence of 0/1 of length ``qubo.n``

    Raises
    ------
    DimensionError
        If the state length does not match.
    ValueError
        If the state contains anything other than 0 or 1.
    """
    bits = np.asarray(state)
    if bits.shape != (qubo.n,):
        raise DimensionError(f"state has shape {bits.shape}, expected ({qubo.n},)")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("state elements must be exactly 0 or 1")
    total = 0.0
    for (i, j), v in qubo.terms.items():
        if bits[i] and bits[j]:
            total += v
    return total


def enumerate_energies(qubo: Qubo) -> np.ndarray:
    """Energies of all 2^n states; entry s uses bit i = (s >> i) & 1.

    Raises :class:`CapacityError` above the enumeration bound.
    """
    if qubo.n > ENUMERATION_BOUND:
        raise CapacityError(
            f"2^{qubo.n} states exceed the enumeration bound 2^{ENUMERATION_BOUND}"
        )
    size = 1 << qubo.n
    energies = np.zeros(size)
    codes = np.arange(size, dtype=np.uint32)
    for (i, j), v in qubo.terms.items():
        bit_i = (codes >> np.uint32(i)) & np.uint32(1)
        if i == j:
            energies += v * bit_i
        else:
            bit_j = (codes >> np.uint32(j)) & np.uint32(1)
            energies += v * (bit_i & bit_j)
    return energies


def decode_state(code: int, n: int) -> np.ndarray:
    """Binary state vector for an integer code (bit i = (code >> i) & 1)."""
    return (code >> np.arange(n, dtype=np.uint32)).astype(np.int8) & 1


def exact_probabilities(qubo: Qubo, beta: float) -> np.ndarray:
    """Boltzmann probabilities over all 2^n state codes at inverse temperature beta."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    energies = enumerate_energies(qubo)
    # Subtract the minimum before exponentiating to avoid overflow.
    weights = np.exp(-beta * (energies - energies.min()))
    return weights / weights.sum()


def boltzmann_distribution(qubo: Qubo, beta: float) -> dict[tuple[int, ...], float]:
    """Exact Boltzmann distribution p(x) = exp(-beta E(x)) / Z.

    Returns a map from state tuples to probabilities summing to 1.
    Only valid up to the enumeration bound (n <= 24).
    """
    probs = exact_probabilities(qubo, beta)
    return {
        tuple(decode_state(code, qubo.n).tolist()): float(p)
        for code, p in enumerate(probs)
    }


@dataclass(frozen=True)
class SampleSet:
    """Energy-sorted collection of sampled states with multiplicities.

    Columnar storage: ``states`` is an (m, n) 0/1 array of distinct
    states, with parallel ``energies`` and ``occurrences``.  Rows are
    sorted by (energy, bitstring) ascending; occurrences sum to the
    number of reads that produced the set.
    """

    states: np.ndarray
    energies: np.ndarray
    occurrences: np.ndarray

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=np.int8))
        if states.size == 0:
            states = states.reshape(0, states.shape[-1] if states.ndim > 1 else 0)
        energies = np.asarray(self.energies, dtype=float)
        occurrences = np.asarray(self.occurrences, dtype=np.int64)
        if not (len(states) == len(energies) == len(occurrences)):
            raise DimensionError("states, energies and occurrences differ in length")
        if np.any(np.diff(energies) < 0):
            raise ValueError("sample energies must be non-decreasing")
        if len(occurrences) and occurrences.min() < 1:
            raise ValueError("occurrences must be positive")
        states.setflags(write=False)
        energies.setflags(write=False)
        occurrences.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "occurrences", occurrences)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def reads(self) -> int:
        return int(self.occurrences.sum())

    def __len__(self) -> int:
        return len(self.energies)

    def __iter__(self) -> Iterator[tuple[np.ndarray, float, int]]:
        for row, e, occ in zip(self.states, self.energies, self.occurrences):
            yield row, float(e), int(occ)

    @property
    def first(self) -> tuple[np.ndarray, float, int]:
        """Lowest-energy record."""
        if not len(self):
            raise ValueError("empty sample set")
        return self.states[0], float(self.energies[0]), int(self.occurrences[0])

    def expanded(self) -> np.ndarray:
        """States repeated by occurrence count, preserving sort order."""
        return np.repeat(self.states, self.occurrences, axis=0)

    @classmethod
    def from_states(cls, qubo: Qubo, states: np.ndarray) -> "SampleSet":
        """Aggregate raw per-read states into a sorted sample set.

        Duplicate states are merged; rows are ordered by energy with the
        bitstring (lexicographic, variable 0 first) breaking ties.
        """
        states = np.asarray(states, dtype=np.int8).reshape(-1, qubo.n)
        unique, counts = np.unique(states, axis=0, return_counts=True)
        adj, bias = qubo.adjacency()
        unique_f = unique.astype(float)
        energies = unique_f @ bias + 0.5 * np.einsum(
            "ri,ij,rj->r", unique_f, adj, unique_f
        )
        order = np.lexsort(tuple(unique[:, k] for k in reversed(range(qubo.n))) + (energies,))
        return cls(unique[order], energies[order], counts[order])


def write_qubo(qubo: Qubo, destination: str | IO[str]) -> None:
    """Write a Qubo in the line-oriented text format (sorted keys)."""
    lines = [f"qubo n={qubo.n}\n"]
    for (i, j) in sorted(qubo.terms):
        lines.append(f"{i} {j} {qubo.terms[(i, j)]:.17g}\n")
    _write_lines(destination, lines)


def read_qubo(source: str | IO[str]) -> Qubo:
    """Parse a Qubo file; raises :class:`FormatError` with the line number."""
    lines = _read_lines(source)
    if not lines:
        raise FormatError("empty qubo file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "qubo" or not header[1].startswith("n="):
        raise FormatError(f"expected 'qubo n=<N>' header, got {lines[0]!r}", line=1)
    n = _parse_int(header[1][2:], "variable count", 1)
    if n < 0:
        raise FormatError(f"negative variable count {n}", line=1)
    terms: dict[tuple[int, int], float] = {}
    for number, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise FormatError(f"expected 'i j value', got {raw!r}", line=number)
        i = _parse_int(parts[0], "index", number)
        j = _parse_int(parts[1], "index", number)
        value = _parse_float(parts[2], number)
        if not (0 <= i <= j < n):
            raise FormatError(f"index pair ({i}, {j}) out of range for n={n}", line=number)
        if (i, j) in terms:
            raise FormatError(f"duplicate entry for ({i}, {j})", line=number)
        terms[(i, j)] = value
    return Qubo(n, terms)


def write_sampleset(samples: SampleSet, destination: str | IO[str]) -> None:
    """Write a SampleSet in the text format (ascending energy)."""
    lines = [f"samples n={samples.n} reads={samples.reads}\n"]
    for state, e, occ in samples:
        bits = "".join("1" if b else "0" for b in state)
        lines.append(f"{e:.17g} {occ} {bits}\n")
    _write_lines(destination, lines)


def read_sampleset(source: str | IO[str]) -> SampleSet:
    """Parse a SampleSet file; validates sortedness and the read count."""
    lines = _read_lines(source)
    if not lines:
        raise FormatError("empty sampleset file")
    header = lines[0].split()
    if (
        len(header) != 3
        or header[0] != "samples"
        or not header[1].startswith("n=")
        or not header[2].startswith("reads=")
    ):
        raise FormatError(
            f"expected 'samples n=<N> reads=<R>' header, got {lines[0]!r}", line=1
        )
    n = _parse_int(header[1][2:], "variable count", 1)
    reads = _parse_int(header[2][6:], "read count", 1)
    states, energies, occurrences = [], [], []
    for number, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise FormatError(f"expected 'energy occurrences bitstring', got {raw!r}", line=number)
        energies.append(_parse_float(parts[0], number))
        occurrences.append(_parse_int(parts[1], "occurrence count", number))
        bits = parts[2]
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise FormatError(f"bad bitstring {bits!r} for n={n}", line=number)
        states.append([int(c) for c in bits])
    try:
        result = SampleSet(
            np.array(states, dtype=np.int8).reshape(-1, n),
            np.array(energies),
            np.array(occurrences),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if result.reads != reads:
        raise FormatError(
            f"occurrences sum to {result.reads} but header declares reads={reads}"
        )
    return result


def _write_lines(destination, lines) -> None:
    if hasattr(destination, "write"):
        destination.writelines(lines)
    else:
        with open(destination, "w") as handle:
            handle.writelines(lines)


def _read_lines(source) -> list[str]:
    if hasattr(source, "read"):
        return source.read().splitlines()
    with open(source) as handle:
        return handle.read().splitlines()


def _parse_int(text: str, what: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"bad {what} {text!r}", line=line) from None


def _parse_float(text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"bad value {text!r}", line=line) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite value {text!r}", line=line)
    return value
