"""Normal modes of quadratic Lagrangians ``L = 1/2 qdot.A.qdot - 1/2 q.K.q``.

The generalized problem ``det(K - w^2 A) = 0`` is reduced with a Cholesky
factor ``A = L L^T`` to the ordinary symmetric problem for ``L^-1 K L^-T``.
The normal coordinates ``xi = C q`` use ``C = Q^T L^T``, so that

    C^T C = A                    (unit mass in every mode)
    C^-T K C^-1 = diag(w^2)

and each row of ``C`` is signed so that its largest-magnitude entry is
positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular

from .errors import DimensionMismatch, InvalidParameters, SingularMatrix

__all__ = [
    "QuadraticSystem",
    "NormalModeBasis",
    "pendulum_matrices",
    "generalized_modes",
    "to_normal",
    "from_normal",
    "pendulum_normal_explicit",
    "pendulum_omega2_closed_form",
    "lagrangian",
    "MAX_DIM",
]

MAX_DIM = 16


@dataclass(frozen=True)
class QuadraticSystem:
    A: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        K = np.array(self.K, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or K.shape != A.shape:
            raise DimensionMismatch(f"A and K must be equal square matrices (got {A.shape}, {K.shape})")
        if A.shape[0] > MAX_DIM:
            raise DimensionMismatch(f"dimension {A.shape[0]} exceeds {MAX_DIM}")
        for name, m in (("A", A), ("K", K)):
            if not np.all(np.isfinite(m)):
                raise InvalidParameters(f"{name} has non-finite entries")
            if np.abs(m - m.T).max() > 1e-12 * (1.0 + np.abs(m).max()):
                raise InvalidParameters(f"{name} is not symmetric")
        A.setflags(write=False)
        K.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class NormalModeBasis:
    C: np.ndarray
    C_inv: np.ndarray
    omega2: np.ndarray
    det_C: float
    system: QuadraticSystem

    @property
    def n(self) -> int:
        return self.omega2.size

    @property
    def omega(self) -> np.ndarray:
        """Mode frequencies; imaginary-axis (unstable) modes come out as NaN."""
        with np.errstate(invalid="ignore"):
            return np.sqrt(self.omega2)


def pendulum_matrices(m1: float, m2: float, l: float, g: float) -> QuadraticSystem:
    """Harmonic double pendulum with equal strings.

    ``A = l^2 [[M, m2], [m2, m2]]``, ``K = g l diag(M, m2)``, ``M = m1 + m2``.
    """
    for name, v in (("m1", m1), ("m2", m2), ("l", l), ("g", g)):
        if not (np.isfinite(v) and v > 0):
            raise InvalidParameters(f"{name} > 0 violated ({name}={v!r})")
    M = m1 + m2
    A = l * l * np.array([[M, m2], [m2, m2]], dtype=float)
    K = g * l * np.diag([M, m2]).astype(float)
    return QuadraticSystem(A, K)


def generalized_modes(sys: QuadraticSystem) -> NormalModeBasis:
    """Solve ``det(K - w^2 A) = 0`` and build the normal-coordinate map.

    Raises
    ------
    SingularMatrix
        If ``A`` is not positive definite.
    """
    try:
        L = cholesky(sys.A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("mass matrix A is not positive definite") from exc
    if np.any(np.diag(L) <= 1e-14 * math.sqrt(np.abs(sys.A).max())):
        raise SingularMatrix("mass matrix A is numerically singular")
    tmp = solve_triangular(L, sys.K, lower=True)
    Kt = solve_triangular(L, tmp.T, lower=True).T
    Kt = 0.5 * (Kt + Kt.T)
    w2, Q = eigh(Kt)
    C = Q.T @ L.T
    for k in range(C.shape[0]):
        if C[k, np.argmax(np.abs(C[k]))] < 0:
            C[k] *= -1.0
    C_inv = np.linalg.inv(C)
    return NormalModeBasis(C=C, C_inv=C_inv, omega2=w2, det_C=abs(float(np.linalg.det(C))), system=sys)


def to_normal(basis: NormalModeBasis, phi):
    """``xi = C phi``; ``phi`` may carry leading batch axes."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] != basis.n:
        raise DimensionMismatch(f"expected vectors of length {basis.n}, got shape {phi.shape}")
    return phi @ basis.C.T


def from_normal(basis: NormalModeBasis, xi):
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != basis.n:
        raise DimensionMismatch(f"expected vectors of length {basis.n}, got shape {xi.shape}")
    return xi @ basis.C_inv.T


def pendulum_normal_explicit(m1: float, m2: float, l: float, phi):
    """Closed-form pendulum normal coordinates, in the order ``(xi_1, xi_2)``.

    ``xi_1 = l sqrt(M (1-r)/2) (phi1 - r phi2)`` oscillates with
    ``w^2 = (M g / m1 l)(1 + r)``, ``xi_2 = l sqrt(M (1+r)/2) (phi1 + r phi2)``
    with ``(1 - r)``; ``r = sqrt(m2/M)``.  Note the order is by *decreasing*
    frequency, the reverse of :func:`generalized_modes`.
    """
    phi = np.asarray(phi, dtype=float)
    M = m1 + m2
    r = math.sqrt(m2 / M)
    p1, p2 = phi[..., 0], phi[..., 1]
    xi1 = l * math.sqrt(M * (1.0 - r) / 2.0) * (p1 - r * p2)
    xi2 = l * math.sqrt(M * (1.0 + r) / 2.0) * (p1 + r * p2)
    return np.stack([xi1, xi2], axis=-1)


def pendulum_omega2_closed_form(m1: float, m2: float, l: float, g: float) -> tuple[float, float]:
    """Squared frequencies ``(M g / m1 l)(1 +- r)`` as ``(with +, with -)``."""
    M = m1 + m2
    r = math.sqrt(m2 / M)
    base = M * g / (m1 * l)
    return base * (1.0 + r), base * (1.0 - r)


def lagrangian(sys: QuadraticSystem, phi, phidot):
    phi = np.asarray(phi, dtype=float)
    phidot = np.asarray(phidot, dtype=float)
    kin = 0.5 * np.einsum("...i,ij,...j->...", phidot, sys.A, phidot)
    pot = 0.5 * np.einsum("...i,ij,...j->...", phi, sys.K, phi)
    return kin - pot
