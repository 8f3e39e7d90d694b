"""Network topology: random connected graphs, incidence algebra, spectral constants.

Agents are indexed ``0 .. m-1``.  Edges are stored once as ``(i, j)`` with
``i < j`` and ordered lexicographically, so edge indices are stable and
reproducible.  All incidence matrices are kept at skeleton size ``m`` (one
scalar entry per agent); the lift to ``d``-dimensional agent states is applied
implicitly by operating on ``(m, d)`` arrays, e.g. ``E_s @ X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TopologyError(Exception):
    """Raised when a graph cannot be built or is structurally invalid."""


@dataclass(frozen=True)
class Topology:
    """An undirected connected graph over ``m`` agents.

    Attributes
    ----------
    m : int
        Number of agents.
    edges : tuple of (int, int)
        Lexicographically ordered edge list, each stored once with the
        smaller agent index first.
    neighbors : tuple of tuple of int
        ``neighbors[i]`` lists the agents adjacent to agent ``i``.
    redraws : int
        How many resampling attempts a random generator needed (0 for
        deterministic constructions).
    """

    m: int
    edges: tuple
    neighbors: tuple = field(default=())
    redraws: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise TopologyError(f"need at least 2 agents, got m={self.m}")
        seen = set()
        for (i, j) in self.edges:
            if not (0 <= i < j < self.m):
                raise TopologyError(f"bad edge ({i}, {j}) for m={self.m}")
            if (i, j) in seen:
                raise TopologyError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        if list(self.edges) != sorted(self.edges):
            raise TopologyError("edges must be in lexicographic order")
        if not self.neighbors:
            nbrs = [[] for _ in range(self.m)]
            for (i, j) in self.edges:
                nbrs[i].append(j)
                nbrs[j].append(i)
            object.__setattr__(self, "neighbors", tuple(tuple(sorted(v)) for v in nbrs))
        if not _is_connected(self.m, self.edges):
            raise TopologyError("graph is not connected")

    @property
    def n(self) -> int:
        """Number of edges."""
        return len(self.edges)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(v) for v in self.neighbors], dtype=int)


@dataclass(frozen=True)
class IncidenceSet:
    """Source/destination and incidence matrices of a topology (skeleton size).

    ``A_s`` and ``A_d`` are ``n x m`` with a single unit entry per row marking
    the smaller-index (source) and larger-index (destination) endpoint of each
    edge.  ``E_s = A_s - A_d`` and ``E_u = A_s + A_d`` are the signed and
    unsigned incidence matrices; ``L_s`` and ``L_u`` their Gram matrices.  The
    degree identity ``2 D = L_s + L_u`` holds by construction.
    """

    A_s: np.ndarray
    A_d: np.ndarray
    E_s: np.ndarray
    E_u: np.ndarray
    L_s: np.ndarray
    L_u: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class SpectralConstants:
    """Eigenvalue constants entering the theoretical contraction rate.

    ``sigma_max_Lu`` is the largest eigenvalue of the unsigned Laplacian
    ``L_u``; ``sigma_min_plus`` is the smallest positive eigenvalue of the
    stacked Gram matrix ``[E_s; s_l^T] [E_s^T, s_l]`` built from the signed
    incidence and the selector row of agent ``l``.
    """

    sigma_max_Lu: float
    sigma_min_plus: float


def _is_connected(m, edges) -> bool:
    # breadth-first sweep from agent 0
    adj = [[] for _ in range(m)]
    for (i, j) in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * m
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return all(seen)


def generate_connected_gnp(m: int, p: float, seed: int, max_redraws: int = 10_000) -> Topology:
    """Draw a connected Erdos-Renyi style graph, resampling until connected.

    Each candidate graph draws every pair ``(i, j)`` independently with
    probability ``p``; disconnected candidates are discarded and the whole
    graph is redrawn.  The number of discarded candidates is recorded on the
    returned topology.

    Parameters
    ----------
    m : int
        Number of agents (at least 2).
    p : float
        Edge probability, ``0 < p <= 1``.
    seed : int
        Seed for the random stream; the result is deterministic given
        ``(m, p, seed)``.
    max_redraws : int, optional
        Budget of attempts before giving up.

    Returns
    -------
    Topology
    """
    if m < 2:
        raise TopologyError(f"need at least 2 agents, got m={m}")
    if not (0.0 < p <= 1.0):
        raise TopologyError(f"edge probability must be in (0, 1], got p={p}")
    rng = np.random.default_rng(seed)
    for attempt in range(max_redraws):
        mask = rng.random((m, m)) < p
        edges = tuple((i, j) for i in range(m) for j in range(i + 1, m) if mask[i, j])
        if _is_connected(m, edges):
            return Topology(m=m, edges=edges, redraws=attempt)
    raise TopologyError(
        f"no connected graph with m={m}, p={p} after {max_redraws} attempts; "
        "increase p or the redraw budget"
    )


def path_topology(m: int) -> Topology:
    """Path graph 0-1-2-...-(m-1); handy for small worked examples."""
    return Topology(m=m, edges=tuple((i, i + 1) for i in range(m - 1)))


def complete_topology(m: int) -> Topology:
    """Complete graph on ``m`` agents."""
    return Topology(m=m, edges=tuple((i, j) for i in range(m) for j in range(i + 1, m)))


def build_incidence(topo: Topology) -> IncidenceSet:
    """Assemble the incidence matrices of a topology at skeleton size.

    Parameters
    ----------
    topo : Topology

    Returns
    -------
    IncidenceSet
    """
    n, m = topo.n, topo.m
    A_s = np.zeros((n, m))
    A_d = np.zeros((n, m))
    for k, (i, j) in enumerate(topo.edges):
        A_s[k, i] = 1.0
        A_d[k, j] = 1.0
    E_s = A_s - A_d
    E_u = A_s + A_d
    return IncidenceSet(
        A_s=A_s,
        A_d=A_d,
        E_s=E_s,
        E_u=E_u,
        L_s=E_s.T @ E_s,
        L_u=E_u.T @ E_u,
        D=np.diag(topo.degrees.astype(float)),
    )


def spectral_constants(inc: IncidenceSet, l: int) -> SpectralConstants:
    """Compute the eigenvalue constants used by the contraction rate.

    The eigenvalues are computed on the skeleton matrices; every block of the
    implicit Kronecker lift shares the same spectrum.  Zero eigenvalues of the
    stacked Gram matrix are filtered with a relative threshold of ``1e-9``
    times its largest eigenvalue before the smallest positive one is taken.

    Parameters
    ----------
    inc : IncidenceSet
    l : int
        Selector agent index (0-based).

    Returns
    -------
    SpectralConstants
    """
    m = inc.E_s.shape[1]
    if not (0 <= l < m):
        raise TopologyError(f"selector index l={l} out of range for m={m}")
    sigma_max_Lu = float(np.linalg.eigvalsh(inc.L_u)[-1])
    s_l = np.zeros((1, m))
    s_l[0, l] = 1.0
    G = np.vstack([inc.E_s, s_l])  # (n+1) x m
    eig = np.linalg.eigvalsh(G @ G.T)
    positive = eig[eig > 1e-9 * max(eig[-1], 0.0)]
    if positive.size == 0:
        raise TopologyError("stacked incidence matrix has no positive eigenvalue; graph disconnected?")
    return SpectralConstants(sigma_max_Lu=sigma_max_Lu, sigma_min_plus=float(positive[0]))


def save_edge_list(topo: Topology, path) -> None:
    """Write a topology as an edge-list text file.

    Format: first line ``m n``, then one ``i j`` pair per line, 1-indexed.
    """
    lines = [f"{topo.m} {topo.n}"]
    lines += [f"{i + 1} {j + 1}" for (i, j) in topo.edges]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_edge_list(path) -> Topology:
    """Read a topology from the edge-list text format written by :func:`save_edge_list`."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise TopologyError("edge-list file too short")
    m, n = int(tokens[0]), int(tokens[1])
    pairs = tokens[2:]
    if len(pairs) != 2 * n:
        raise TopologyError(f"expected {2 * n} endpoint tokens, found {len(pairs)}")
    edges = []
    for k in range(n):
        i, j = int(pairs[2 * k]) - 1, int(pairs[2 * k + 1]) - 1
        edges.append((min(i, j), max(i, j)))
    return Topology(m=m, edges=tuple(sorted(edges)))
