"""Physical parameters of the kinetically coupled two-particle system.

The Hamiltonian is

    H = P1^2/(2 m1) + P2^2/(2 m2) + kappa*P1*P2 + lambda*(1 - alpha*exp(-beta*(x1 - x2 - r0)))^2

and everything downstream works in centre-of-mass / relative variables

    X = mu1*x1 + mu2*x2,   x_r = x1 - x2 - r0,
    P = p1 + p2,           P_r = mu2*p1 - mu1*p2,

in which the kinetic energy reads ``a*P**2 + d*P_r**2 + 2*b*P*P_r``.
Units are left to the caller; only ``hbar`` is explicit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameters

__all__ = [
    "SystemParams",
    "ReducedCoeffs",
    "PhaseSpacePoint",
    "reduce",
    "to_com_relative",
    "from_com_relative",
    "kinetic_energy",
    "kinetic_energy_com",
]


@dataclass(frozen=True)
class SystemParams:
    m1: float = 1.0
    m2: float = 1.0
    kappa: float = 0.0
    lam: float = 25.0
    alpha: float = 1.0
    beta: float = 1.0
    r0: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        self.validate()

    def violations(self) -> list[str]:
        """Return a human readable list of violated invariants (empty if valid)."""
        out = []
        values = dict(m1=self.m1, m2=self.m2, kappa=self.kappa, lam=self.lam,
                      alpha=self.alpha, beta=self.beta, r0=self.r0, hbar=self.hbar)
        for name, v in values.items():
            if not np.isfinite(v):
                out.append(f"{name} must be finite (got {v!r})")
        if out:
            return out
        for name in ("m1", "m2", "alpha", "beta", "hbar"):
            if values[name] <= 0:
                out.append(f"{name} > 0 violated ({name}={values[name]!r})")
        if self.lam < 0:
            out.append(f"lambda >= 0 violated (lambda={self.lam!r})")
        if self.m1 > 0 and self.m2 > 0:
            bound = 1.0 / (self.m1 * self.m2)
            if not self.kappa ** 2 < bound:
                out.append(
                    f"kappa^2 < 1/(m1*m2) violated (kappa^2={self.kappa**2!r}, 1/(m1*m2)={bound!r})"
                )
            mu = self.m1 * self.m2 / (self.m1 + self.m2)
            if not self.kappa < 1.0 / (2.0 * mu):
                out.append(f"kappa < 1/(2*mu) violated (kappa={self.kappa!r}, 1/(2*mu)={1/(2*mu)!r})")
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise InvalidParameters("invalid parameters: " + "; ".join(bad))


@dataclass(frozen=True)
class ReducedCoeffs:
    """Mass bookkeeping in centre-of-mass / relative variables.

    ``a``, ``d`` and ``b`` are the coefficients of ``P**2``, ``P_r**2`` and
    ``2*P*P_r`` in the kinetic energy; ``D = a*d - b**2``.
    """

    M_total: float
    mu: float
    mu1: float
    mu2: float
    a: float
    d: float
    b: float
    D: float


class PhaseSpacePoint(NamedTuple):
    x1: float
    x2: float
    p1: float
    p2: float


def reduce(params: SystemParams) -> ReducedCoeffs:
    params.validate()
    m1, m2, kappa = params.m1, params.m2, params.kappa
    M = m1 + m2
    mu = m1 * m2 / M
    mu1 = m1 / M
    mu2 = m2 / M
    # cross term uses mu1*mu2; the mu2*mu2 variant breaks kinetic-energy equivalence
    a = 1.0 / (2.0 * M) + kappa * mu1 * mu2
    d = 1.0 / (2.0 * mu) - kappa
    b = 0.5 * kappa * (mu2 - mu1)
    D = a * d - b * b
    if not (a > 0 and d > 0 and D > 0):
        raise InvalidParameters(f"non-positive kinetic form: a={a!r}, d={d!r}, D={D!r}")
    return ReducedCoeffs(M_total=M, mu=mu, mu1=mu1, mu2=mu2, a=a, d=d, b=b, D=D)


def to_com_relative(pt: PhaseSpacePoint, params: SystemParams):
    """Map ``(x1, x2, p1, p2)`` to ``(X, x_r, P, P_r)``.

    Works elementwise on arrays as well as scalars.
    """
    c = reduce(params)
    x1, x2, p1, p2 = pt
    X = c.mu1 * x1 + c.mu2 * x2
    x_r = x1 - x2 - params.r0
    P = p1 + p2
    P_r = c.mu2 * p1 - c.mu1 * p2
    return X, x_r, P, P_r


def from_com_relative(X, x_r, P, P_r, params: SystemParams) -> PhaseSpacePoint:
    """Inverse of :func:`to_com_relative`.

    The separation convention is ``x1 - x2 = x_r + r0``, so the equilibrium
    offset is distributed over both particles in proportion to the opposite mass.
    """
    c = reduce(params)
    sep = x_r + params.r0
    x1 = X + c.mu2 * sep
    x2 = X - c.mu1 * sep
    p1 = P_r + c.mu1 * P
    p2 = c.mu2 * P - P_r
    return PhaseSpacePoint(x1, x2, p1, p2)


def kinetic_energy(p1, p2, params: SystemParams):
    """Kinetic energy in particle momenta, including the ``kappa*p1*p2`` term."""
    return p1 ** 2 / (2 * params.m1) + p2 ** 2 / (2 * params.m2) + params.kappa * p1 * p2


def kinetic_energy_com(P, P_r, coeffs: ReducedCoeffs):
    return coeffs.a * P ** 2 + coeffs.d * P_r ** 2 + 2.0 * coeffs.b * P * P_r
