"""Hybrid primal-dual update engine.

Two engines live here.  The reduced engine is the deployable protocol: each
active agent solves a small local linear system for its update direction,
takes the primal step, broadcasts, and runs its dual update from buffered
neighbor values; the selector agent additionally refreshes the regularizer
pair ``(theta, lambda)``.  The reference engine keeps the full variable set
``(x, z, alpha, beta, theta, lambda)`` and performs the five-step sequence of
the underlying three-block splitting; from zero initialization the two
engines generate identical ``(x, theta, lambda)`` trajectories under
synchronous activation, which the test suite verifies.

Both engines share the hybrid curvature surrogate: agent ``i`` contributes
``J_ii = hessian`` (Newton) or ``J_ii = 0`` (gradient), shifted by
``mu_z * degree_i + mu_theta * [i == selector] + Delta_ii``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .objectives import ConvexityConstants, LocalObjective, Regularizer
from .topology import IncidenceSet, Topology


class ProtocolError(Exception):
    """State violates a protocol precondition (e.g. missing buffer entry)."""


class ConfigurationError(Exception):
    """Hyperparameters or update modes are inconsistent."""


@dataclass(frozen=True)
class HyperParams:
    """Penalty parameters and step-size shifts of the update engine.

    Parameters
    ----------
    mu_z : float
        Penalty on the edge-consensus constraint.
    mu_theta : float
        Penalty on the selector constraint ``x_l = theta``.
    epsilon : float
        Uniform diagonal shift ``Delta_ii``; acts as an inverse step size for
        gradient-mode agents.
    delta : tuple, optional
        Per-agent overrides of ``Delta_ii``; incompatible with certified mode.
    delta_mode : str
        ``"uniform"`` shifts every agent by ``epsilon``; ``"newton_zero"``
        drops the shift for Newton agents (their linearization error vanishes
        asymptotically so no damping is needed, though this regime is only
        justified near the solution).  Certified mode requires ``"uniform"``.
    l : int
        Selector agent index (0-based); holds the ``(theta, lambda)`` pair.
    gamma : float
        Regularizer weight as configured (the :class:`Regularizer` object is
        authoritative for prox evaluation; this field is config plumbing).
    certified_mode : bool
        Enforce the hyperparameter coupling the contraction analysis assumes:
        ``mu_z = 2 * mu_theta`` and a uniform ``Delta = epsilon * I``.
    """

    mu_z: float
    mu_theta: float
    epsilon: float = 0.0
    delta: tuple | None = None
    delta_mode: str = "uniform"
    l: int = 0
    gamma: float = 0.0
    certified_mode: bool = False

    def __post_init__(self):
        if self.mu_z <= 0 or self.mu_theta <= 0:
            raise ConfigurationError(f"mu_z and mu_theta must be positive, got {self.mu_z}, {self.mu_theta}")
        if self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.delta is not None and any(v < 0 for v in self.delta):
            raise ConfigurationError("per-agent delta overrides must be nonnegative")
        if self.delta_mode not in ("uniform", "newton_zero"):
            raise ConfigurationError(f"unknown delta mode {self.delta_mode!r}")
        if self.certified_mode:
            if not np.isclose(self.mu_z, 2.0 * self.mu_theta, rtol=1e-12, atol=0.0):
                raise ConfigurationError(
                    f"certified mode requires mu_z = 2 * mu_theta, got mu_z={self.mu_z}, mu_theta={self.mu_theta}"
                )
            if self.delta is not None:
                raise ConfigurationError("certified mode requires a uniform delta (no per-agent overrides)")
            if self.delta_mode != "uniform":
                raise ConfigurationError("certified mode requires delta_mode='uniform'")

    def delta_ii(self, i: int, newton: bool = False) -> float:
        """Diagonal shift of agent ``i`` (``newton`` selects the Newton-agent rule)."""
        if self.delta is not None:
            return float(self.delta[i])
        if newton and self.delta_mode == "newton_zero":
            return 0.0
        return self.epsilon


@dataclass(frozen=True)
class UpdateMode:
    """Partition of agents into gradient and Newton updaters.

    ``newton`` is a boolean mask of length ``m``; for the named fraction-``q``
    variants, the Newton set is the first ``ceil(q * m)`` agents under a
    seeded permutation so runs are reproducible.
    """

    newton: np.ndarray

    @classmethod
    def from_fraction(cls, q: float, m: int, seed: int = 0) -> "UpdateMode":
        if not 0.0 <= q <= 1.0:
            raise ConfigurationError(f"newton fraction must lie in [0, 1], got {q}")
        k = int(np.ceil(q * m)) if q > 0 else 0
        mask = np.zeros(m, dtype=bool)
        mask[np.random.default_rng(seed).permutation(m)[:k]] = True
        return cls(newton=mask)

    @classmethod
    def all_gradient(cls, m: int) -> "UpdateMode":
        return cls(newton=np.zeros(m, dtype=bool))

    @classmethod
    def all_newton(cls, m: int) -> "UpdateMode":
        return cls(newton=np.ones(m, dtype=bool))

    @property
    def fraction(self) -> float:
        return float(self.newton.mean())


@dataclass
class NetworkState:
    """Mutable per-run state of the reduced engine.

    ``x`` and ``phi`` hold one d-vector per agent; ``theta`` and ``lam`` are
    the selector agent's regularizer pair.  ``buffer`` stores the latest
    broadcast of every agent (a broadcast is identical to all neighbors, so
    one slot per sender suffices); ``buffer_filled`` marks slots that have
    received at least one value.
    """

    x: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    buffer: np.ndarray
    buffer_filled: np.ndarray

    @classmethod
    def zeros(cls, m: int, d: int, broadcast: bool = True) -> "NetworkState":
        """Zero initialization; with ``broadcast`` every agent's zero state is pre-shared."""
        return cls(
            x=np.zeros((m, d)),
            phi=np.zeros((m, d)),
            theta=np.zeros(d),
            lam=np.zeros(d),
            buffer=np.zeros((m, d)),
            buffer_filled=np.full(m, broadcast),
        )

    def copy(self) -> "NetworkState":
        return NetworkState(self.x.copy(), self.phi.copy(), self.theta.copy(),
                            self.lam.copy(), self.buffer.copy(), self.buffer_filled.copy())


@dataclass
class AdmmReferenceState:
    """Full variable set of the reference three-block engine.

    Keeps both halves ``alpha`` and ``beta`` of the edge dual explicitly so
    the identities ``alpha = -beta`` and ``z = 0.5 * E_u x`` can be observed
    rather than assumed.
    """

    x: np.ndarray      # (m, d)
    z: np.ndarray      # (n, d)
    alpha: np.ndarray  # (n, d)
    beta: np.ndarray   # (n, d)
    theta: np.ndarray  # (d,)
    lam: np.ndarray    # (d,)

    @classmethod
    def zeros(cls, m: int, n: int, d: int) -> "AdmmReferenceState":
        return cls(np.zeros((m, d)), np.zeros((n, d)), np.zeros((n, d)),
                   np.zeros((n, d)), np.zeros(d), np.zeros(d))


def local_lagrangian_gradient(i: int, state: NetworkState, hp: HyperParams,
                              obj: LocalObjective, topo: Topology) -> np.ndarray:
    """Right-hand side of agent ``i``'s local linear system.

    Evaluates ``grad f_i(x_i) + phi_i + (mu_z/2) * sum_j (x_i - x_j)``
    plus, for the selector agent, ``lambda + mu_theta * (x_l - theta)``,
    with neighbor values read from the local buffer.

    Raises
    ------
    ProtocolError
        If some neighbor has never broadcast.
    """
    nbrs = topo.neighbors[i]
    for j in nbrs:
        if not state.buffer_filled[j]:
            raise ProtocolError(f"agent {i}: no buffered value from neighbor {j}")
    x_i = state.x[i]
    g = obj.gradient(x_i) + state.phi[i]
    if nbrs:
        nbr_sum = state.buffer[list(nbrs)].sum(axis=0)
        g = g + 0.5 * hp.mu_z * (len(nbrs) * x_i - nbr_sum)
    if i == hp.l:
        g = g + state.lam + hp.mu_theta * (x_i - state.theta)
    return g


def update_direction(i: int, newton: bool, g: np.ndarray, hp: HyperParams,
                     obj: LocalObjective, topo: Topology) -> np.ndarray:
    """Solve agent ``i``'s local system ``(J_ii + scale * I) u = g``.

    ``scale = mu_z * degree_i + mu_theta * [i == l] + Delta_ii``.  Newton mode
    factors the shifted Hessian (symmetric positive definite by assumption);
    gradient mode reduces to a scalar division.
    """
    scale = hp.mu_z * topo.degree(i) + (hp.mu_theta if i == hp.l else 0.0) + hp.delta_ii(i, newton)
    if not newton:
        if scale <= 0:
            raise ConfigurationError(f"agent {i}: gradient-mode scale {scale} is not positive")
        return g / scale
    H = obj.hessian(None) + scale * np.eye(obj.d)
    try:
        c, low = scipy.linalg.cho_factor(H)
    except scipy.linalg.LinAlgError as exc:
        raise ConfigurationError(f"agent {i}: local system matrix is not positive definite") from exc
    return scipy.linalg.cho_solve((c, low), g)


def dual_step(i: int, state: NetworkState, hp: HyperParams, topo: Topology,
              neighbor_values: np.ndarray) -> None:
    """Aggregate dual ascent for agent ``i``: ``phi_i += (mu_z/2) * sum_j (x_i - x_j)``.

    ``neighbor_values`` supplies the ``x_j`` read for each neighbor; the
    freshness policy of the caller decides whether these are the committed
    post-step broadcasts or an iteration-start snapshot.
    """
    nbrs = topo.neighbors[i]
    if not nbrs:
        return
    nbr_sum = neighbor_values[list(nbrs)].sum(axis=0)
    state.phi[i] += 0.5 * hp.mu_z * (len(nbrs) * state.x[i] - nbr_sum)


def edge_dual_step(state: NetworkState, active: np.ndarray, hp: HyperParams,
                   topo: Topology) -> None:
    """Edge-consistent dual ascent over all edges incident to active agents.

    Every such edge contributes ``(mu_z/2) * (x_i - x_j)`` (committed values)
    with opposite signs to both endpoint aggregates, so ``sum_i phi_i`` stays
    zero and ``phi`` remains the signed aggregation of per-edge duals under
    any activation pattern.  For an active agent this reproduces the
    aggregate rule exactly; the extra work is the passive absorption by the
    inactive endpoint, which in a deployment happens when the broadcast
    arrives in its buffer.
    """
    for (i, j) in topo.edges:
        if active[i] or active[j]:
            delta = 0.5 * hp.mu_z * (state.x[i] - state.x[j])
            state.phi[i] += delta
            state.phi[j] -= delta


def regularizer_step(state: NetworkState, hp: HyperParams, reg: Regularizer) -> None:
    """Refresh the selector pair: prox step on ``theta``, then ascent on ``lambda``.

    The caller must only invoke this when the selector agent was active this
    iteration (the pair is tied to its activation).
    """
    x_l = state.x[hp.l]
    theta_new = reg.prox(x_l + state.lam / hp.mu_theta, hp.mu_theta)
    state.lam = state.lam + hp.mu_theta * (x_l - theta_new)
    state.theta = theta_new


def agent_step(i: int, state: NetworkState, hp: HyperParams, obj: LocalObjective,
               newton: bool, topo: Topology, dual: str = "edge") -> tuple[int, np.ndarray]:
    """One active agent's full turn: primal step, broadcast, dual update.

    Intended for single-agent activation (gossip-style schedules), where
    buffered neighbor values and iteration-start values coincide.  Returns
    the broadcast record ``(i, x_i_new)``.
    """
    g = local_lagrangian_gradient(i, state, hp, obj, topo)
    u = update_direction(i, newton, g, hp, obj, topo)
    state.x[i] = state.x[i] - u
    state.buffer[i] = state.x[i]
    state.buffer_filled[i] = True
    if dual == "edge":
        active = np.zeros(len(state.x), dtype=bool)
        active[i] = True
        edge_dual_step(state, active, hp, topo)
    else:
        dual_step(i, state, hp, topo, state.buffer)
    return i, state.x[i].copy()


def step_active(state: NetworkState, active: np.ndarray, hp: HyperParams,
                objectives: list[LocalObjective], mode: UpdateMode,
                reg: Regularizer, topo: Topology, policy: str = "fresh",
                dual: str = "edge") -> None:
    """Advance the network by one iteration with the given active set.

    All active agents first complete their primal steps against the pre-step
    buffers, then all broadcasts are committed at a barrier, and only then do
    the dual updates run.

    ``dual`` selects the dual bookkeeping.  The default ``"edge"`` applies
    each incident edge's increment to both endpoint aggregates
    (:func:`edge_dual_step`), which keeps the per-agent duals equal to the
    signed aggregation of per-edge duals under any activation pattern;
    ``"agents"`` is the literal rule in which only active agents touch their
    own aggregate.  The two coincide exactly under synchronous activation,
    but the literal rule lets ``sum_i phi_i`` drift under partial activation
    and the network then settles on a perturbed problem's solution.

    ``policy`` selects which neighbor values the ``"agents"`` dual update
    reads: committed post-step buffers (``"fresh"``, default) or
    iteration-start values (``"snapshot"``).  The policies coincide whenever
    no two neighbors are active simultaneously.  ``"edge"`` bookkeeping
    always uses committed values, the only assignment consistent for both
    endpoints, so it only combines with ``"fresh"``.
    """
    if policy not in ("fresh", "snapshot"):
        raise ConfigurationError(f"unknown freshness policy {policy!r}")
    if dual not in ("edge", "agents"):
        raise ConfigurationError(f"unknown dual bookkeeping {dual!r}")
    if dual == "edge" and policy == "snapshot":
        raise ConfigurationError("snapshot policy requires dual='agents' "
                                 "(edge increments have no consistent snapshot reading)")
    idx = np.flatnonzero(active)
    snapshot = state.buffer.copy() if policy == "snapshot" else None
    updates = []
    for i in idx:
        g = local_lagrangian_gradient(i, state, hp, objectives[i], topo)
        u = update_direction(i, bool(mode.newton[i]), g, hp, objectives[i], topo)
        updates.append((i, state.x[i] - u))
    for i, x_new in updates:
        state.x[i] = x_new
        state.buffer[i] = x_new
        state.buffer_filled[i] = True
    if dual == "edge":
        edge_dual_step(state, active, hp, topo)
    else:
        source = state.buffer if policy == "fresh" else snapshot
        for i, _ in updates:
            dual_step(i, state, hp, topo, source)
    if active[hp.l]:
        regularizer_step(state, hp, reg)


def admm_reference_step(ref: AdmmReferenceState, hp: HyperParams,
                        objectives: list[LocalObjective], mode: UpdateMode,
                        reg: Regularizer, inc: IncidenceSet, topo: Topology) -> None:
    """One synchronous sweep of the reference three-block engine.

    Sequence: linearized primal step on ``x``, exact minimization over the
    edge variables ``z``, prox step on ``theta``, gradient ascent on the edge
    duals ``(alpha, beta)``, gradient ascent on ``lambda``.  No relation
    between ``alpha`` and ``beta`` or between ``z`` and ``x`` is assumed.
    """
    m, d = ref.x.shape
    grad_f = np.stack([objectives[i].gradient(ref.x[i]) for i in range(m)])
    grad = grad_f + inc.A_s.T @ ref.alpha + inc.A_d.T @ ref.beta
    grad += hp.mu_z * (inc.A_s.T @ (inc.A_s @ ref.x - ref.z) + inc.A_d.T @ (inc.A_d @ ref.x - ref.z))
    grad[hp.l] += ref.lam + hp.mu_theta * (ref.x[hp.l] - ref.theta)
    x_new = np.empty_like(ref.x)
    for i in range(m):
        x_new[i] = ref.x[i] - update_direction(i, bool(mode.newton[i]), grad[i], hp, objectives[i], topo)
    z_new = (ref.alpha + ref.beta) / (2.0 * hp.mu_z) + 0.5 * inc.E_u @ x_new
    theta_new = reg.prox(x_new[hp.l] + ref.lam / hp.mu_theta, hp.mu_theta)
    ref.alpha = ref.alpha + hp.mu_z * (inc.A_s @ x_new - z_new)
    ref.beta = ref.beta + hp.mu_z * (inc.A_d @ x_new - z_new)
    ref.lam = ref.lam + hp.mu_theta * (x_new[hp.l] - theta_new)
    ref.x = x_new
    ref.z = z_new
    ref.theta = theta_new


def error_term(x_prev: np.ndarray, x_next: np.ndarray, newton: bool,
               obj: LocalObjective, consts: ConvexityConstants) -> tuple[np.ndarray, float]:
    """Linearization error of one agent's primal step, with its certified bound.

    Returns ``e_i = grad f_i(x_prev) - grad f_i(x_next) + J_ii (x_next - x_prev)``
    (``J_ii`` the local Hessian in Newton mode, zero in gradient mode) and the
    bound ``Pi_ii * ||x_next - x_prev||`` where ``Pi_ii = M_f`` for gradient
    agents and ``min(2 M_f, (L_f / 2) * ||x_next - x_prev||)`` for Newton
    agents.  Quadratic objectives make the Newton error vanish identically.
    """
    step = x_next - x_prev
    e = obj.gradient(x_prev) - obj.gradient(x_next)
    if newton:
        e = e + obj.hessian(x_prev) @ step
        pi = min(2.0 * consts.M_f, 0.5 * consts.L_f * float(np.linalg.norm(step)))
    else:
        pi = consts.M_f
    return e, pi * float(np.linalg.norm(step))
