"""Tests for the exact, Gibbs and annealing samplers."""

import numpy as np
import pytest

from qubonet.qubo import Qubo, energy, enumerate_energies
from qubonet.samplers import (
    SamplerConfig,
    _chain_sample,
    _final_state_distribution,
    beta_schedule,
    get_sampler,
    sample_anneal,
    sample_exact,
    sample_gibbs,
)

from oracles import brute_boltzmann
from test_qubo import ONE_HOT_2, random_qubo


def empirical_distribution(samples):
    """State-tuple -> frequency over all reads."""
    total = samples.reads
    return {tuple(state.tolist()): occ / total for state, _, occ in samples}


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


class TestConfig:
    def test_defaults_valid(self):
        config = SamplerConfig()
        assert config.reads == 1000
        assert config.beta_start <= config.beta_end

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"reads": 0},
            {"sweeps": 0},
            {"beta_start": 0.0},
            {"beta_start": 2.0, "beta_end": 1.0},
            {"threads": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            SamplerConfig(**kwargs)

    def test_geometric_schedule_endpoints(self):
        config = SamplerConfig(sweeps=100, beta_start=0.1, beta_end=5.0)
        betas = beta_schedule(config)
        assert betas[0] == pytest.approx(0.1)
        assert betas[-1] == pytest.approx(5.0)
        ratios = betas[1:] / betas[:-1]
        assert np.allclose(ratios, ratios[0])


class TestBackendRegistry:
    def test_known_backends(self):
        assert get_sampler("exact") is sample_exact
        assert get_sampler("gibbs") is sample_gibbs
        assert get_sampler("anneal") is sample_anneal

    def test_unknown_backend(self):
        with pytest.raises(ValueError, match="unknown sampler backend"):
            get_sampler("qpu")


def check_contract(qubo, samples, reads):
    """Shared sampler postconditions: counts, sortedness, stored energies."""
    assert samples.reads == reads
    assert np.all(np.diff(samples.energies) >= 0)
    for state, stored, _ in samples:
        recomputed = energy(qubo, state)
        assert stored == pytest.approx(recomputed, rel=1e-9, abs=1e-12)


class TestExactSampler:
    def test_free_variable_near_half(self):
        samples = sample_exact(Qubo(1), SamplerConfig(reads=10000, seed=1))
        check_contract(Qubo(1), samples, 10000)
        dist = empirical_distribution(samples)
        assert 0.47 <= dist[(1,)] <= 0.53

    def test_one_hot_block_concentrates(self):
        # Boltzmann weights e^5, e^5, 1, 1: the two one-hot states carry
        # 2e^5 / (2e^5 + 2) of the mass, far above the asserted bound.
        q = Qubo(2, ONE_HOT_2)
        samples = sample_exact(q, SamplerConfig(reads=10000, beta_end=5.0, seed=2))
        dist = empirical_distribution(samples)
        assert dist.get((1, 0), 0.0) + dist.get((0, 1), 0.0) >= 0.85

    def test_deterministic_given_seed(self):
        q = random_qubo(np.random.default_rng(5), 4)
        config = SamplerConfig(reads=500, seed=99)
        a = sample_exact(q, config)
        b = sample_exact(q, config)
        assert a.states.tolist() == b.states.tolist()
        assert a.occurrences.tolist() == b.occurrences.tolist()

    def test_matches_oracle_distribution(self):
        rng = np.random.default_rng(8)
        q = random_qubo(rng, 3)
        samples = sample_exact(q, SamplerConfig(reads=200000, beta_end=1.0, seed=3))
        oracle = brute_boltzmann(q.terms, 3, beta=1.0)
        assert tv_distance(empirical_distribution(samples), oracle) < 0.01


class TestGibbsSampler:
    def test_flat_landscape_unbiased(self):
        q = Qubo(3)
        samples = sample_gibbs(q, SamplerConfig(reads=10000, sweeps=5, seed=4))
        check_contract(q, samples, 10000)
        means = samples.expanded().mean(axis=0)
        assert np.all((0.47 <= means) & (means <= 0.53))

    def test_tv_against_exact_distribution(self):
        # The spec's acceptance workload for a single instance.
        rng = np.random.default_rng(42)
        q = random_qubo(rng, 8)
        samples = sample_gibbs(
            q, SamplerConfig(reads=200000, sweeps=500, beta_end=1.0, seed=5)
        )
        oracle = brute_boltzmann(q.terms, 8, beta=1.0)
        assert tv_distance(empirical_distribution(samples), oracle) < 0.05

    def test_one_hot_ground_state_found(self):
        q = Qubo(2, ONE_HOT_2)
        samples = sample_gibbs(q, SamplerConfig(reads=100, sweeps=50, beta_end=5.0, seed=6))
        assert samples.first[1] == pytest.approx(-1.0)

    def test_detailed_balance_smoke(self):
        # Empirical stationary distribution on 2-variable systems.
        rng = np.random.default_rng(10)
        for trial in range(3):
            q = random_qubo(rng, 2)
            samples = sample_gibbs(
                q, SamplerConfig(reads=1000000, sweeps=60, beta_end=1.0, seed=trial)
            )
            oracle = brute_boltzmann(q.terms, 2, beta=1.0)
            assert tv_distance(empirical_distribution(samples), oracle) < 0.02

    def test_deterministic_given_seed(self):
        q = random_qubo(np.random.default_rng(12), 5)
        config = SamplerConfig(reads=300, sweeps=30, seed=77)
        a = sample_gibbs(q, config)
        b = sample_gibbs(q, config)
        assert a.states.tolist() == b.states.tolist()
        assert a.occurrences.tolist() == b.occurrences.tolist()


class TestAnnealSampler:
    def test_one_hot_ground_recovery_rate(self):
        q = Qubo(2, ONE_HOT_2)
        samples = sample_anneal(q, SamplerConfig(reads=100, sweeps=100, seed=4))
        ground = [occ for state, e, occ in samples if e == pytest.approx(-1.0)]
        assert sum(ground) >= 99

    def test_contract_on_flat_landscape(self):
        q = Qubo(6)
        samples = sample_anneal(q, SamplerConfig(reads=250, sweeps=10, seed=14))
        check_contract(q, samples, 250)

    def test_ground_state_recovery_smoke(self):
        # Small version of the 16-variable acceptance criterion.
        rng = np.random.default_rng(15)
        hits = 0
        for trial in range(10):
            q = random_qubo(rng, 16)
            exact_min = enumerate_energies(q).min()
            samples = sample_anneal(q, SamplerConfig(reads=100, sweeps=1000, seed=trial))
            if samples.first[1] == pytest.approx(exact_min, rel=1e-9, abs=1e-9):
                hits += 1
        assert hits >= 9

    def test_fixed_beta_degenerates_to_metropolis(self):
        # With beta_start == beta_end the schedule is flat, and the
        # stationary behaviour agrees with the heat-bath sampler.
        rng = np.random.default_rng(16)
        for trial in range(3):
            q = random_qubo(rng, 4)
            betas = np.full(400, 1.0)
            sa_dist = _final_state_distribution(q, betas, metropolis=True)
            gibbs_dist = _final_state_distribution(q, betas, metropolis=False)
            assert 0.5 * np.abs(sa_dist - gibbs_dist).sum() < 0.05
            empirical = empirical_distribution(
                sample_anneal(
                    q,
                    SamplerConfig(
                        reads=100000, sweeps=400, beta_start=1.0, beta_end=1.0, seed=trial
                    ),
                )
            )
            assert tv_distance(empirical, brute_boltzmann(q.terms, 4, 1.0)) < 0.05

    def test_deterministic_given_seed(self):
        q = random_qubo(np.random.default_rng(18), 4)
        config = SamplerConfig(reads=200, sweeps=50, seed=21)
        a = sample_anneal(q, config)
        b = sample_anneal(q, config)
        assert a.states.tolist() == b.states.tolist()
        assert a.occurrences.tolist() == b.occurrences.tolist()


class TestChainKernels:
    """The literal per-read numba kernels, forced below the dispatch cutoff."""

    def test_gibbs_chains_match_boltzmann(self):
        rng = np.random.default_rng(25)
        q = random_qubo(rng, 5)
        samples = _chain_sample(
            q, SamplerConfig(reads=40000, sweeps=200, beta_end=1.0, seed=1), anneal=False
        )
        check_contract(q, samples, 40000)
        oracle = brute_boltzmann(q.terms, 5, beta=1.0)
        assert tv_distance(empirical_distribution(samples), oracle) < 0.05

    def test_anneal_chains_find_one_hot_ground(self):
        q = Qubo(2, ONE_HOT_2)
        samples = _chain_sample(
            q, SamplerConfig(reads=100, sweeps=100, seed=2), anneal=True
        )
        ground = [occ for state, e, occ in samples if e == pytest.approx(-1.0)]
        assert sum(ground) >= 99

    def test_chains_deterministic_and_thread_invariant(self):
        q = random_qubo(np.random.default_rng(29), 6)
        base = SamplerConfig(reads=150, sweeps=40, seed=31)
        a = _chain_sample(q, base, anneal=True)
        b = _chain_sample(q, SamplerConfig(reads=150, sweeps=40, seed=31, threads=4), anneal=True)
        assert a.states.tolist() == b.states.tolist()
        assert a.occurrences.tolist() == b.occurrences.tolist()

    def test_chain_and_distribution_paths_agree(self):
        # Same sweep schedule, two mechanisms, one law.
        rng = np.random.default_rng(33)
        q = random_qubo(rng, 4)
        config = SamplerConfig(reads=40000, sweeps=100, beta_end=1.5, seed=3)
        collapsed = sample_gibbs(q, config)
        literal = _chain_sample(q, config, anneal=False)
        assert (
            tv_distance(
                empirical_distribution(collapsed), empirical_distribution(literal)
            )
            < 0.03
        )
