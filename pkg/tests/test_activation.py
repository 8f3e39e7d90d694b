import math

import numpy as np
import pytest

from hippo.activation import (
    ActivationError,
    ActivationScheme,
    attach_edges,
    expected_activation,
    induced_edge_activation,
    sample,
)
from hippo.topology import generate_connected_gnp, path_topology


def test_synchronous_activates_everyone():
    scheme = ActivationScheme(kind="synchronous", m=5)
    for t in range(4):
        rec = sample(scheme, t)
        assert rec.agents.all()
        assert induced_edge_activation(rec, path_topology(5)).all()


def test_single_uniform_frequencies_within_three_sigma():
    m, draws = 4, 10_000
    scheme = ActivationScheme(kind="single_uniform", m=m, seed=1)
    counts = np.zeros(m)
    for t in range(draws):
        rec = sample(scheme, t)
        assert rec.active_count == 1
        counts += rec.agents
    p = 1.0 / m
    sigma = math.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(counts / draws - p) <= 3 * sigma)


def test_bernoulli_with_unit_probabilities_is_synchronous():
    scheme = ActivationScheme(kind="bernoulli", m=3, probs=(1.0, 1.0, 1.0), seed=2)
    for t in range(5):
        assert sample(scheme, t).agents.all()


def test_fraction_uniform_draws_exact_count():
    scheme = ActivationScheme(kind="fraction_uniform", m=7, fraction=0.4, seed=3)
    k = math.ceil(0.4 * 7)
    for t in range(20):
        assert sample(scheme, t).active_count == k


def test_poisson_clocks_single_event_rate_proportional():
    rates = (1.0, 2.0, 3.0, 4.0)
    scheme = ActivationScheme(kind="poisson_clocks", m=4, rates=rates, seed=4)
    draws = 20_000
    counts = np.zeros(4)
    for t in range(draws):
        rec = sample(scheme, t)
        assert rec.active_count == 1
        counts += rec.agents
    expected = np.array(rates) / sum(rates)
    sigma = np.sqrt(expected * (1 - expected) / draws)
    assert np.all(np.abs(counts / draws - expected) <= 3 * sigma)


def test_sampling_deterministic_in_seed_and_iteration():
    scheme = ActivationScheme(kind="bernoulli", m=6, probs=(0.3,) * 6, seed=9)
    a = [sample(scheme, t).agents for t in range(10)]
    b = [sample(scheme, t).agents for t in range(10)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    other = sample(scheme.with_seed(10), 3).agents
    assert not all(np.array_equal(sample(scheme, 3).agents, other) for _ in [0])


def test_positive_probability_validation():
    with pytest.raises(ActivationError):
        ActivationScheme(kind="bernoulli", m=3, probs=(0.5, 0.0, 0.5))
    with pytest.raises(ActivationError):
        ActivationScheme(kind="fraction_uniform", m=3, fraction=0.0)
    with pytest.raises(ActivationError):
        ActivationScheme(kind="poisson_clocks", m=2, rates=(1.0, 0.0))
    with pytest.raises(ActivationError):
        ActivationScheme(kind="gossip", m=3)


def test_induced_edges_empty_and_single_agent():
    topo = path_topology(4)
    scheme = ActivationScheme(kind="bernoulli", m=4, probs=(0.5,) * 4, seed=0)
    rec = sample(scheme, 0)
    none = induced_edge_activation(type(rec)(t=0, agents=np.zeros(4, dtype=bool)), topo)
    assert not none.any()
    solo = np.zeros(4, dtype=bool)
    solo[1] = True
    edges = induced_edge_activation(type(rec)(t=0, agents=solo), topo)
    # edges (0,1) and (1,2) touch agent 1
    assert edges.tolist() == [True, True, False]


def test_induced_edges_match_ceiling_formula():
    # oracle: ceil((X_ii + X_jj)/2) per edge
    rng = np.random.default_rng(5)
    for seed in range(4):
        topo = generate_connected_gnp(5, 0.5, seed=seed)
        for _ in range(50):
            agents = rng.random(5) < 0.4
            rec = attach_edges(
                type(sample(ActivationScheme(kind="synchronous", m=5), 0))(t=0, agents=agents), topo)
            expected = np.array([math.ceil((agents[i] + agents[j]) / 2) for (i, j) in topo.edges], dtype=bool)
            assert np.array_equal(rec.edges, expected)


def test_expected_activation_synchronous():
    topo = path_topology(3)
    p_agent, p_edge, p_min = expected_activation(ActivationScheme(kind="synchronous", m=3), topo)
    assert np.all(p_agent == 1.0) and np.all(p_edge == 1.0) and p_min == 1.0


def test_expected_activation_single_uniform():
    topo = path_topology(4)
    p_agent, p_edge, p_min = expected_activation(
        ActivationScheme(kind="single_uniform", m=4, seed=0), topo)
    assert np.allclose(p_agent, 0.25)
    assert np.allclose(p_edge, 0.5)
    assert p_min == 0.25


def test_expected_activation_bernoulli_path_with_monte_carlo():
    topo = path_topology(3)
    scheme = ActivationScheme(kind="bernoulli", m=3, probs=(0.5, 0.5, 0.5), seed=11)
    p_agent, p_edge, p_min = expected_activation(scheme, topo)
    assert np.allclose(p_edge, 0.75)
    assert p_min == 0.5
    draws = 100_000
    edge_counts = np.zeros(topo.n)
    for t in range(draws):
        edge_counts += induced_edge_activation(sample(scheme, t), topo)
    sigma = np.sqrt(0.75 * 0.25 / draws)
    assert np.all(np.abs(edge_counts / draws - 0.75) <= 3 * sigma)


def test_expected_activation_fraction_uniform():
    topo = path_topology(5)
    scheme = ActivationScheme(kind="fraction_uniform", m=5, fraction=0.5, seed=2)
    p_agent, p_edge, _ = expected_activation(scheme, topo)
    k = 3
    assert np.allclose(p_agent, k / 5)
    # P(edge inactive) = C(m-2,k)/C(m,k) = (m-k)(m-k-1)/(m(m-1))
    assert np.allclose(p_edge, 1.0 - (2 * 1) / (5 * 4))
    draws = 100_000
    counts = np.zeros(topo.n)
    for t in range(draws):
        counts += induced_edge_activation(sample(scheme, t), topo)
    sigma = np.sqrt(p_edge[0] * (1 - p_edge[0]) / draws)
    assert np.all(np.abs(counts / draws - p_edge) <= 3 * sigma)


def test_expected_activation_poisson():
    topo = path_topology(3)
    scheme = ActivationScheme(kind="poisson_clocks", m=3, rates=(1.0, 1.0, 2.0), seed=1)
    p_agent, p_edge, p_min = expected_activation(scheme, topo)
    assert np.allclose(p_agent, [0.25, 0.25, 0.5])
    assert np.allclose(p_edge, [0.5, 0.75])
    assert p_min == 0.25
