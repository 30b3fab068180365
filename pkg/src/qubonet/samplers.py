"""Classical samplers standing in for the quantum annealer.

Three backends share one contract: given a :class:`~qubonet.qubo.Qubo`
and a :class:`SamplerConfig` they return a :class:`~qubonet.qubo.SampleSet`
whose occurrences sum to ``reads``, sorted ascending by energy, and
deterministic for a fixed seed.

* ``exact``  - independent draws from the exact Boltzmann distribution
  at ``beta_end`` (enumeration, n <= 24).
* ``gibbs``  - per read, ``sweeps`` full single-site heat-bath sweeps at
  fixed ``beta_end`` from a uniformly random initial state; the
  conditional probability of bit i being 1 is the logistic function of
  ``-beta * dE_i``.
* ``anneal`` - per read, ``sweeps`` Metropolis single-flip sweeps with
  beta interpolated geometrically from ``beta_start`` to ``beta_end``.

Sites are visited in fixed index order within a sweep, and ``dE_i`` is
computed incrementally from the adjacency of site i (cost proportional
to its degree), which is the hot loop for the large scaling model.

Implementation note: reads are independent chains, so for small systems
(n <= 12) both chain samplers evolve the *distribution* over all 2^n
states through the identical sweep schedule and then draw ``reads``
i.i.d. final states from it.  The multiset of returned states has
exactly the same law as literally simulating each read; the literal
per-read kernels (numba) are used above the cutoff and are exercised
directly in the tests.

Randomness: chain kernels use the splitmix64 generator (Steele et al.),
giving each read its own stream derived from ``(seed, read_index)`` so
that results do not depend on execution order or thread count.
Everything else uses numpy's seeded PCG64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .qubo import Qubo, SampleSet, exact_probabilities

#: Largest n for which chain samplers take the exact-distribution path.
DISTRIBUTION_PATH_BOUND = 12

BACKENDS = ("exact", "gibbs", "anneal")


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs shared by all samplers.

    ``beta_end`` is the fixed inverse temperature for the exact and
    Gibbs samplers; annealing sweeps beta from ``beta_start`` to
    ``beta_end``.  ``threads`` bounds read-level parallelism; the
    default of 1 keeps output bit-reproducible on any machine.
    """

    reads: int = 1000
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 5.0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.reads < 1:
            raise ValueError(f"reads must be >= 1, got {self.reads}")
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError(
                f"need beta_end >= beta_start > 0, got ({self.beta_start}, {self.beta_end})"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


def get_sampler(backend: str):
    """Resolve a backend identifier to a sampler callable.

    Unknown identifiers are reserved for future remote backends and
    raise ValueError.
    """
    try:
        return {"exact": sample_exact, "gibbs": sample_gibbs, "anneal": sample_anneal}[
            backend
        ]
    except KeyError:
        raise ValueError(
            f"unknown sampler backend {backend!r}; expected one of {BACKENDS}"
        ) from None


def sample_exact(qubo: Qubo, config: SamplerConfig) -> SampleSet:
    """Draw ``reads`` independent states from the Boltzmann distribution.

    Enumeration-based; raises :class:`CapacityError` for n > 24.
    """
    probs = exact_probabilities(qubo, config.beta_end)
    rng = np.random.default_rng(config.seed)
    codes = rng.choice(len(probs), size=config.reads, p=probs)
    return SampleSet.from_states(qubo, _decode_codes(codes, qubo.n))


def sample_gibbs(qubo: Qubo, config: SamplerConfig) -> SampleSet:
    """Fixed-temperature heat-bath sampling, one chain per read."""
    if qubo.n <= DISTRIBUTION_PATH_BOUND:
        betas = np.full(config.sweeps, config.beta_end)
        probs = _final_state_distribution(qubo, betas, metropolis=False)
        return _draw_from_distribution(qubo, probs, config)
    return _chain_sample(qubo, config, anneal=False)


def sample_anneal(qubo: Qubo, config: SamplerConfig) -> SampleSet:
    """Simulated annealing (Metropolis) with a geometric beta schedule."""
    if qubo.n <= DISTRIBUTION_PATH_BOUND:
        probs = _final_state_distribution(qubo, beta_schedule(config), metropolis=True)
        return _draw_from_distribution(qubo, probs, config)
    return _chain_sample(qubo, config, anneal=True)


def beta_schedule(config: SamplerConfig) -> np.ndarray:
    """Geometric interpolation from beta_start to beta_end, one beta per sweep."""
    if config.sweeps == 1:
        return np.array([config.beta_end])
    return np.geomspace(config.beta_start, config.beta_end, config.sweeps)


# -- exact-distribution path (small n) ---------------------------------------


def _final_state_distribution(qubo: Qubo, betas: np.ndarray, metropolis: bool) -> np.ndarray:
    """Distribution over state codes after the sweep schedule.

    Starts uniform (the law of a uniformly random initial state) and
    applies each single-site update to the whole distribution, sites in
    fixed index order within a sweep.
    """
    from .qubo import enumerate_energies

    n = qubo.n
    energies = enumerate_energies(qubo)
    probs = np.full(1 << n, 1.0 / (1 << n))
    lower = [np.flatnonzero(((np.arange(1 << n) >> i) & 1) == 0) for i in range(n)]
    delta = [energies[lower[i] + (1 << i)] - energies[lower[i]] for i in range(n)]
    for beta in betas:
        for i in range(n):
            lo = lower[i]
            hi = lo + (1 << i)
            d = delta[i]
            p_lo, p_hi = probs[lo], probs[hi]
            if metropolis:
                up = np.where(d <= 0, 1.0, np.exp(-beta * np.maximum(d, 0.0)))
                down = np.where(d >= 0, 1.0, np.exp(beta * np.minimum(d, 0.0)))
                probs[lo] = p_lo * (1 - up) + p_hi * down
                probs[hi] = p_hi * (1 - down) + p_lo * up
            else:
                p_one = 1.0 / (1.0 + np.exp(beta * d))
                total = p_lo + p_hi
                probs[lo] = total * (1 - p_one)
                probs[hi] = total * p_one
    return probs


def _draw_from_distribution(qubo: Qubo, probs: np.ndarray, config: SamplerConfig) -> SampleSet:
    rng = np.random.default_rng(config.seed)
    codes = rng.choice(len(probs), size=config.reads, p=probs / probs.sum())
    return SampleSet.from_states(qubo, _decode_codes(codes, qubo.n))


def _decode_codes(codes: np.ndarray, n: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(n, dtype=np.uint32)[None, :]) & 1).astype(np.int8)


# -- literal per-read chains (numba) -----------------------------------------


def _chain_sample(qubo: Qubo, config: SamplerConfig, anneal: bool) -> SampleSet:
    indptr, indices, data, bias = _csr_adjacency(qubo)
    if anneal:
        betas = beta_schedule(config)
    else:
        betas = np.full(config.sweeps, config.beta_end)
    numba.set_num_threads(min(config.threads, numba.config.NUMBA_NUM_THREADS))
    states = _sweep_kernel(
        indptr,
        indices,
        data,
        bias,
        config.reads,
        betas,
        np.uint64(config.seed),
        anneal,
    )
    return SampleSet.from_states(qubo, states)


def _csr_adjacency(qubo: Qubo):
    """Neighbor lists (CSR) and bias vector for incremental dE."""
    n = qubo.n
    bias = np.zeros(n)
    neighbors: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), v in qubo.terms.items():
        if i == j:
            bias[i] = v
        else:
            neighbors[i].append((j, v))
            neighbors[j].append((i, v))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i, adj in enumerate(neighbors):
        indptr[i + 1] = indptr[i] + len(adj)
    indices = np.zeros(indptr[-1], dtype=np.int64)
    data = np.zeros(indptr[-1])
    for i, adj in enumerate(neighbors):
        for k, (j, v) in enumerate(adj):
            indices[indptr[i] + k] = j
            data[indptr[i] + k] = v
    return indptr, indices, data, bias


_PHI = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _uniform(state):
    """Advance a splitmix64 state; return (new_state, u) with u in [0, 1)."""
    state = state + _PHI
    z = _mix64(state)
    return state, (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, parallel=True)
def _sweep_kernel(indptr, indices, data, bias, reads, betas, seed, anneal):
    n = bias.shape[0]
    sweeps = betas.shape[0]
    out = np.zeros((reads, n), dtype=np.int8)
    for r in prange(reads):
        # Independent stream per read: order of execution cannot matter.
        stream = _mix64(seed + np.uint64(r) * _PHI)
        state = np.zeros(n, dtype=np.int8)
        for i in range(n):
            stream, u = _uniform(stream)
            state[i] = 1 if u < 0.5 else 0
        for t in range(sweeps):
            beta = betas[t]
            for i in range(n):
                de = bias[i]
                for k in range(indptr[i], indptr[i + 1]):
                    de += data[k] * state[indices[k]]
                stream, u = _uniform(stream)
                if anneal:
                    # Metropolis: de is the energy change of flipping bit i.
                    if state[i] == 1:
                        de = -de
                    if de <= 0.0 or u < np.exp(-beta * de):
                        state[i] = 1 - state[i]
                else:
                    # Heat bath: sigma(-beta * dE_i) chance of setting bit i.
                    if u < 1.0 / (1.0 + np.exp(beta * de)):
                        state[i] = 1
                    else:
                        state[i] = 0
        out[r] = state
    return out
