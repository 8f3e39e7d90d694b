"""Local smooth objectives, the nonsmooth regularizer, and convexity constants.

Each agent holds a least-squares loss ``f_i(x) = 0.5 ||A_i x - b_i||^2`` with
an optional ridge term ``(ridge/2) ||x||^2``.  The regularizer ``g`` is shared
across the network and coupled to a single selector agent; it is evaluated
through its proximal mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConvexityError(Exception):
    """Raised when a local objective fails the strong-convexity requirement."""


class LocalObjective:
    """Quadratic local loss ``0.5 ||A x - b||^2 + (ridge/2) ||x||^2``.

    Immutable after construction; evaluation is pure.  The Hessian
    ``A^T A + ridge * I`` is constant and cached.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, ridge: float = 0.0):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise ValueError(f"incompatible shapes A{A.shape}, b{b.shape}")
        if ridge < 0:
            raise ValueError(f"ridge must be nonnegative, got {ridge}")
        self.A = A
        self.b = b
        self.ridge = float(ridge)
        self.n_rows, self.d = A.shape
        self._hessian = A.T @ A + ridge * np.eye(self.d)
        self._linear = A.T @ b  # gradient(x) = hessian @ x - linear

    def value(self, x: np.ndarray) -> float:
        r = self.A @ x - self.b
        return 0.5 * float(r @ r) + 0.5 * self.ridge * float(x @ x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.A.T @ (self.A @ x - self.b) + self.ridge * x

    def hessian(self, x: np.ndarray | None = None) -> np.ndarray:
        return self._hessian

    @property
    def hessian_matrix(self) -> np.ndarray:
        return self._hessian

    @property
    def linear_term(self) -> np.ndarray:
        return self._linear


@dataclass(frozen=True)
class ConvexityConstants:
    """Strong-convexity modulus, gradient Lipschitz constant, Hessian Lipschitz constant.

    For the built-in quadratic objectives the Hessian is constant, so
    ``L_f = 0``.
    """

    m_f: float
    M_f: float
    L_f: float = 0.0

    def __post_init__(self):
        if not (0 < self.m_f <= self.M_f):
            raise ConvexityError(f"need 0 < m_f <= M_f, got m_f={self.m_f}, M_f={self.M_f}")
        if self.L_f < 0:
            raise ConvexityError(f"L_f must be nonnegative, got {self.L_f}")


def estimate_constants(objectives: list[LocalObjective], tol: float = 1e-12) -> ConvexityConstants:
    """Estimate the uniform curvature constants over all local objectives.

    ``m_f`` is the smallest Hessian eigenvalue over agents and ``M_f`` the
    largest, computed from singular values of each data matrix (plus ridge)
    so the eigensolver-based tests stay an independent check.

    Raises
    ------
    ConvexityError
        If some agent's smallest Hessian eigenvalue is not strictly positive
        (within ``tol``); adding a ridge makes the objectives strongly convex.
    """
    if not objectives:
        raise ValueError("no objectives given")
    m_f = np.inf
    M_f = 0.0
    for i, obj in enumerate(objectives):
        sv = np.linalg.svd(obj.A, compute_uv=False)
        lam_max = (sv[0] ** 2 if sv.size else 0.0) + obj.ridge
        lam_min = (sv[-1] ** 2 if obj.n_rows >= obj.d and sv.size else 0.0) + obj.ridge
        if lam_min <= tol:
            raise ConvexityError(
                f"agent {i}: smallest Hessian eigenvalue {lam_min:.3e} is not positive; "
                "set a ridge > 0 to restore strong convexity"
            )
        m_f = min(m_f, lam_min)
        M_f = max(M_f, lam_max)
    return ConvexityConstants(m_f=float(m_f), M_f=float(M_f), L_f=0.0)


class Regularizer:
    """Shared nonsmooth term ``g`` with a closed-form proximal mapping.

    Three kinds are supported:

    - ``"zero"``: ``g = 0`` (prox is the identity),
    - ``"l1"``: ``g = gamma * ||.||_1`` (prox soft-thresholds at
      ``gamma / mu``),
    - ``"box"``: indicator of ``[lower, upper]`` (prox clips).
    """

    KINDS = ("zero", "l1", "box")

    def __init__(self, kind: str = "zero", gamma: float = 0.0,
                 lower: float = -np.inf, upper: float = np.inf):
        if kind not in self.KINDS:
            raise ValueError(f"unknown regularizer kind {kind!r}")
        if gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {gamma}")
        if kind == "box" and not lower <= upper:
            raise ValueError(f"empty box [{lower}, {upper}]")
        self.kind = kind
        self.gamma = float(gamma)
        self.lower = float(lower)
        self.upper = float(upper)

    def value(self, x: np.ndarray) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "l1":
            return self.gamma * float(np.abs(x).sum())
        inside = np.all(x >= self.lower - 1e-12) and np.all(x <= self.upper + 1e-12)
        return 0.0 if inside else np.inf

    def prox(self, x: np.ndarray, mu: float) -> np.ndarray:
        """Evaluate ``argmin_v g(v) + (mu/2) ||v - x||^2`` componentwise."""
        if mu <= 0:
            raise ValueError(f"prox penalty must be positive, got mu={mu}")
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return x.copy()
        if self.kind == "l1":
            thresh = self.gamma / mu
            return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)
        return np.clip(x, self.lower, self.upper)

    def subdifferential_gap(self, lam: np.ndarray, theta: np.ndarray) -> float:
        """Distance of ``lam`` from the subdifferential of ``g`` at ``theta``.

        Zero means ``lam`` is a valid subgradient; used as a KKT residual.
        """
        lam = np.asarray(lam, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.kind == "zero":
            return float(np.linalg.norm(lam))
        if self.kind == "l1":
            gap = np.empty_like(lam)
            pos = theta > 0
            neg = theta < 0
            zero = ~(pos | neg)
            gap[pos] = np.abs(lam[pos] - self.gamma)
            gap[neg] = np.abs(lam[neg] + self.gamma)
            gap[zero] = np.maximum(np.abs(lam[zero]) - self.gamma, 0.0)
            return float(np.linalg.norm(gap))
        # box: normal cone is {0} strictly inside, one-sided at the faces
        gap = np.empty_like(lam)
        at_lo = np.isclose(theta, self.lower)
        at_hi = np.isclose(theta, self.upper)
        interior = ~(at_lo | at_hi)
        gap[interior] = np.abs(lam[interior])
        gap[at_lo] = np.maximum(lam[at_lo], 0.0)   # only nonpositive normals allowed
        gap[at_hi] = np.maximum(-lam[at_hi], 0.0)  # only nonnegative normals allowed
        return float(np.linalg.norm(gap))


def default_gamma(objectives: list[LocalObjective]) -> float:
    """Default l1 weight: ``0.1 * || sum_i A_i^T b_i ||_inf``.

    A documented convention, not a reported value; keeps the regularizer
    active without zeroing the whole solution.
    """
    acc = np.zeros(objectives[0].d)
    for obj in objectives:
        acc += obj.linear_term
    return 0.1 * float(np.abs(acc).max())
