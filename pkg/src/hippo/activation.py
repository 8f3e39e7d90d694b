"""Stochastic agent-activation schemes and the induced edge activation.

One activation record is drawn per simulator iteration.  Sampling is
counter-based: the stream for iteration ``t`` is seeded by ``(seed, t)``, so
records are deterministic in ``(seed, t)`` and independent of evaluation
order.  Every scheme must give each agent a strictly positive activation
probability; this is validated at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .topology import Topology


class ActivationError(Exception):
    """Invalid activation scheme configuration."""


KINDS = ("synchronous", "single_uniform", "bernoulli", "fraction_uniform", "poisson_clocks")


@dataclass(frozen=True)
class ActivationScheme:
    """Rule for drawing the set of active agents at each iteration.

    Parameters
    ----------
    kind : str
        One of ``synchronous`` (everyone), ``single_uniform`` (one agent
        uniformly), ``bernoulli`` (independent coin per agent with
        probabilities ``probs``), ``fraction_uniform`` (``ceil(C * m)``
        agents uniformly without replacement), ``poisson_clocks`` (the agent
        whose exponential clock fires next; one event per iteration, chosen
        proportionally to ``rates``).
    m : int
        Number of agents.
    seed : int
        Base seed of the activation stream.
    """

    kind: str
    m: int
    seed: int = 0
    probs: tuple = ()          # bernoulli
    fraction: float = 1.0      # fraction_uniform
    rates: tuple = ()          # poisson_clocks

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ActivationError(f"unknown activation kind {self.kind!r}")
        if self.m < 1:
            raise ActivationError(f"need at least one agent, got m={self.m}")
        if self.kind == "bernoulli":
            p = np.asarray(self.probs, dtype=float)
            if p.shape != (self.m,):
                raise ActivationError(f"need {self.m} probabilities, got shape {p.shape}")
            if np.any(p <= 0) or np.any(p > 1):
                raise ActivationError("every activation probability must lie in (0, 1]")
        if self.kind == "fraction_uniform" and not (0 < self.fraction <= 1):
            raise ActivationError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.kind == "poisson_clocks":
            r = np.asarray(self.rates, dtype=float)
            if r.shape != (self.m,):
                raise ActivationError(f"need {self.m} rates, got shape {r.shape}")
            if np.any(r <= 0):
                raise ActivationError("every clock rate must be positive")

    def with_seed(self, seed: int) -> "ActivationScheme":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class ActivationRecord:
    """Realized activation at one iteration.

    ``agents`` is a boolean mask of length ``m``; ``edges`` (when attached)
    is the induced boolean edge mask: an edge is active iff at least one of
    its endpoints is.
    """

    t: int
    agents: np.ndarray
    edges: np.ndarray | None = None

    @property
    def active_count(self) -> int:
        return int(self.agents.sum())


def sample(scheme: ActivationScheme, t: int) -> ActivationRecord:
    """Draw the active-agent set for iteration ``t``."""
    m = scheme.m
    if scheme.kind == "synchronous":
        return ActivationRecord(t=t, agents=np.ones(m, dtype=bool))
    rng = np.random.default_rng([scheme.seed, t])
    mask = np.zeros(m, dtype=bool)
    if scheme.kind == "single_uniform":
        mask[rng.integers(m)] = True
    elif scheme.kind == "bernoulli":
        mask = rng.random(m) < np.asarray(scheme.probs)
    elif scheme.kind == "fraction_uniform":
        k = math.ceil(scheme.fraction * m)
        mask[rng.choice(m, size=k, replace=False)] = True
    else:  # poisson_clocks: next firing clock is rate-proportional
        r = np.asarray(scheme.rates, dtype=float)
        mask[rng.choice(m, p=r / r.sum())] = True
    return ActivationRecord(t=t, agents=mask)


def induced_edge_activation(record: ActivationRecord, topo: Topology) -> np.ndarray:
    """Edge mask induced by an agent mask: active iff an endpoint is active.

    Equals the entrywise ceiling of ``(X_ii + X_jj) / 2`` per edge.
    """
    agents = record.agents
    return np.array([agents[i] or agents[j] for (i, j) in topo.edges], dtype=bool)


def attach_edges(record: ActivationRecord, topo: Topology) -> ActivationRecord:
    """Return a copy of the record with the induced edge mask attached."""
    return ActivationRecord(t=record.t, agents=record.agents,
                            edges=induced_edge_activation(record, topo))


def expected_activation(scheme: ActivationScheme, topo: Topology):
    """Analytic per-agent and per-edge activation probabilities, and their minimum.

    Returns
    -------
    p_agent : ndarray of shape (m,)
    p_edge : ndarray of shape (n,)
        Probability that each edge is induced active (an endpoint activates).
    p_min : float
        Minimum over both vectors; enters the theoretical contraction rate.
    """
    m = scheme.m
    if topo.m != m:
        raise ActivationError(f"scheme built for m={m}, topology has m={topo.m}")
    if scheme.kind == "synchronous":
        p_agent = np.ones(m)
        p_edge = np.ones(topo.n)
    elif scheme.kind == "single_uniform":
        p_agent = np.full(m, 1.0 / m)
        p_edge = np.full(topo.n, 2.0 / m)  # endpoint activations are mutually exclusive
    elif scheme.kind == "bernoulli":
        p_agent = np.asarray(scheme.probs, dtype=float)
        p_edge = np.array([1.0 - (1.0 - p_agent[i]) * (1.0 - p_agent[j]) for (i, j) in topo.edges])
    elif scheme.kind == "fraction_uniform":
        k = math.ceil(scheme.fraction * m)
        p_agent = np.full(m, k / m)
        if k >= m - 1:
            p_edge = np.ones(topo.n)
        else:
            # P(neither endpoint drawn) = C(m-2, k) / C(m, k)
            p_none = (m - k) * (m - k - 1) / (m * (m - 1))
            p_edge = np.full(topo.n, 1.0 - p_none)
    else:  # poisson_clocks
        r = np.asarray(scheme.rates, dtype=float)
        p_agent = r / r.sum()
        p_edge = np.array([p_agent[i] + p_agent[j] for (i, j) in topo.edges])
    p_min = float(min(p_agent.min(), p_edge.min() if topo.n else 1.0))
    return p_agent, p_edge, p_min
