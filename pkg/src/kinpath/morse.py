"""Kinetically coupled two-particle Morse oscillator.

After the centre-of-mass motion (wavenumber ``K_com``) is split off, the
relative coordinate sees

    H_rel = d * P_r**2 + lam * (1 - alpha*exp(-beta*x_r))**2,

i.e. a Morse oscillator with effective mass ``1/(2d)``, plus the constant
``hbar**2 K**2 D/d`` from the centre of mass.  A cross term ``2 b P P_r``
survives in the kinetic energy; completing the square removes it at the cost
of the gauge phase ``exp(-i b K x_r / d)`` (see :func:`full_wavefunction`).

Conventions
-----------
* Energies returned by ``bound_energy`` are total energies,
  ``E = com_energy + E_rel`` with ``E_rel`` measured from the well bottom.
  The dissociation threshold is ``com_energy + lam``.
* The Whittaker/Laguerre argument is ``z = 2*alpha*xi*exp(-beta*x_r)``, which
  decays for ``x_r -> +inf``, the side where the potential flattens out.
* ``xi = sqrt(lam/d) / (hbar*beta)`` and, inside the Green function,
  ``eta = sqrt((E_threshold - E)/d) / (hbar*beta)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import specfun
from .errors import IndexOutOfRange, InvalidParameters, PoleError
from .params import ReducedCoeffs, SystemParams, reduce

__all__ = [
    "MorseSolution",
    "EffectiveRelativeProblem",
    "BoundState",
    "ContinuumState",
    "build",
    "com_energy",
    "threshold_energy",
    "bound_energy",
    "relative_bound_energy",
    "bound_energies",
    "bound_wavefunction",
    "full_wavefunction",
    "continuum_wavefunction",
    "continuum_energy",
    "green_function",
    "eta_of_energy",
    "pole_function",
    "green_poles",
    "potential",
    "morse_potential",
    "with_custom_potential",
    "effective_problem",
]


@dataclass(frozen=True)
class MorseSolution:
    params: SystemParams
    coeffs: ReducedCoeffs
    xi: float
    n_bound: int
    K_com: float = 0.0

    @property
    def x_min(self) -> float:
        """Position of the potential minimum, ``ln(alpha)/beta``."""
        return math.log(self.params.alpha) / self.params.beta

    @property
    def mass_eff(self) -> float:
        return 1.0 / (2.0 * self.coeffs.d)

    def domain(self) -> tuple[float, float]:
        """Integration window for normalization integrals.

        ``[x_min - 20/beta, x_min + 40/beta]``, widened on the right when the
        top bound state decays slowly (its tail falls off as ``exp(-s beta x)``).
        """
        beta = self.params.beta
        right = 40.0
        if self.n_bound:
            s_top = self.xi - self.n_bound + 0.5
            right = max(right, 15.0 / s_top)
        return self.x_min - 20.0 / beta, self.x_min + right / beta


@dataclass(frozen=True)
class EffectiveRelativeProblem:
    """One-dimensional problem ``-hbar^2/(2 m) psi'' + V psi`` for the FD oracle."""

    mass_eff: float
    potential: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    hbar: float = 1.0


def _count_bound(xi: float) -> int:
    if xi <= 0.5:
        return 0
    return int(math.ceil(xi - 0.5))


def build(params: SystemParams, K_com: float = 0.0) -> MorseSolution:
    """Assemble the analytic solution data for ``params``.

    Examples
    --------
    >>> sol = build(SystemParams(m1=1, m2=1, kappa=0, lam=25, alpha=1, beta=1))
    >>> sol.xi, sol.n_bound
    (5.0, 5)
    """
    coeffs = reduce(params)
    if not np.isfinite(K_com):
        raise InvalidParameters(f"K_com must be finite (got {K_com!r})")
    xi = math.sqrt(params.lam / coeffs.d) / (params.hbar * params.beta)
    return MorseSolution(params=params, coeffs=coeffs, xi=xi, n_bound=_count_bound(xi),
                         K_com=float(K_com))


def com_energy(sol: MorseSolution) -> float:
    """Centre-of-mass kinetic energy ``hbar^2 K^2 (1 - m1 m2 kappa^2) / (2M (1 - 2 mu kappa))``.

    Identical to ``hbar^2 K^2 D/d``.
    """
    p, c = sol.params, sol.coeffs
    mu_M = p.m1 * p.m2
    return (p.hbar * sol.K_com) ** 2 * (1.0 - mu_M * p.kappa ** 2) / (
        2.0 * c.M_total * (1.0 - 2.0 * c.mu * p.kappa))


def threshold_energy(sol: MorseSolution) -> float:
    return com_energy(sol) + sol.params.lam


def _check_index(sol: MorseSolution, n: int) -> None:
    if not (0 <= n < sol.n_bound):
        raise IndexOutOfRange(f"bound state index {n} outside [0, {sol.n_bound})")


def relative_bound_energy(sol: MorseSolution, n: int) -> float:
    """``-d hbar^2 beta^2 (n+1/2)^2 + 2 hbar beta (n+1/2) sqrt(lam d)``; lies in ``(0, lam)``."""
    _check_index(sol, n)
    p, d = sol.params, sol.coeffs.d
    nu = n + 0.5
    hb = p.hbar * p.beta
    return -d * hb * hb * nu * nu + 2.0 * hb * nu * math.sqrt(p.lam * d)


def bound_energy(sol: MorseSolution, n: int) -> float:
    return com_energy(sol) + relative_bound_energy(sol, n)


def bound_energies(sol: MorseSolution, relative: bool = False) -> np.ndarray:
    shift = 0.0 if relative else com_energy(sol)
    return np.array([shift + relative_bound_energy(sol, n) for n in range(sol.n_bound)])


# ---------------------------------------------------------------------------
# wavefunctions


def _z_of_x(sol: MorseSolution, x):
    p = sol.params
    return 2.0 * p.alpha * sol.xi * np.exp(-p.beta * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class BoundState:
    """Normalized relative-coordinate bound state ``psi_n(x_r)`` (real, positive as x_r -> +inf)."""

    n: int
    energy: float
    relative_energy: float
    norm: float
    log_norm: float
    _sol: MorseSolution = field(repr=False)

    def __call__(self, x):
        sol, n = self._sol, self.n
        s = sol.xi - n - 0.5
        z = _z_of_x(sol, x)
        logz = np.log(z)
        expo = self.log_norm + s * logz - 0.5 * z
        out = np.zeros(np.shape(z))
        # e^{-z/2} beats the polynomial long before it overflows
        live = expo + n * np.log1p(z) > -740.0
        if np.any(live):
            zl = np.asarray(z)[live] if np.ndim(z) else z
            lag = specfun.laguerre(n, 2.0 * s, zl)
            vals = np.exp(np.asarray(expo)[live] if np.ndim(z) else expo) * lag
            if np.ndim(z):
                out[live] = vals
            else:
                out = vals
        return out if np.ndim(out) else float(out)


def bound_wavefunction(sol: MorseSolution, n: int) -> BoundState:
    """Bound state ``n`` of the relative motion.

    ``psi_n = N_n z^s exp(-z/2) L_n^(2s)(z)`` with ``s = xi - n - 1/2`` and
    ``N_n^2 = beta (2 xi - 2n - 1) n! / Gamma(2 xi - n)``, normalized over ``x_r``.
    """
    _check_index(sol, n)
    p = sol.params
    s = sol.xi - n - 0.5
    log_norm = 0.5 * (math.log(p.beta) + math.log(2.0 * s) + math.lgamma(n + 1.0)
                      - specfun.log_gamma(2.0 * sol.xi - n).real)
    return BoundState(n=n, energy=bound_energy(sol, n), relative_energy=relative_bound_energy(sol, n),
                      norm=math.exp(log_norm), log_norm=log_norm, _sol=sol)


def full_wavefunction(sol: MorseSolution, n: int, X, x_r):
    """Two-particle bound state ``exp(iKX)/sqrt(2 pi) * exp(-i b K x_r / d) * psi_n(x_r)``.

    The second phase undoes the ``2 b P P_r`` cross term; it vanishes for equal
    masses or ``K_com = 0``.
    """
    c = sol.coeffs
    K = sol.K_com
    psi = bound_wavefunction(sol, n)(x_r)
    phase = np.exp(1j * K * np.asarray(X) - 1j * c.b * K * np.asarray(x_r) / c.d)
    return phase * psi / math.sqrt(2.0 * math.pi)


def continuum_energy(sol: MorseSolution, k: float) -> float:
    """``E_threshold + d hbar^2 (beta k)^2`` for dimensionless Whittaker index ``k``."""
    p = sol.params
    return threshold_energy(sol) + sol.coeffs.d * (p.hbar * p.beta * k) ** 2


@dataclass(frozen=True)
class ContinuumState:
    """Scattering state ``psi_k(x_r)``, normalized to ``delta(k - k')``.

    Far to the right it behaves as ``sqrt(2 beta/pi) cos(k beta x_r + phase)``.
    ``gamma_phase`` is ``arg Gamma(1/2 + ik - xi)``, the constant phase
    that is stripped to make the state real.
    """

    k: float
    energy: float
    log_prefactor: float
    gamma_phase: float
    _sol: MorseSolution = field(repr=False)

    def complex_values(self, x):
        """Assembled values before discarding the (rounding-level) imaginary part."""
        sol = self._sol
        p = sol.params
        x = np.asarray(x, dtype=float)
        z = _z_of_x(sol, x)
        w = specfun.whittaker_w(sol.xi, 1j * self.k, z)
        return np.exp(self.log_prefactor + 0.5 * p.beta * x) * w

    def __call__(self, x):
        v = self.complex_values(x)
        return v.real if np.ndim(v) else float(np.real(v))


def continuum_wavefunction(sol: MorseSolution, k: float) -> ContinuumState:
    if not k > 0:
        raise InvalidParameters(f"continuum index k must be > 0 (got {k!r})")
    p = sol.params
    lg = specfun.log_gamma(complex(0.5 - sol.xi, k))
    two_pi_k = 2.0 * math.pi * k
    log_sinh = two_pi_k + math.log1p(-math.exp(-2.0 * two_pi_k)) - math.log(2.0)
    log_pref = 0.5 * (math.log(p.beta * k) + log_sinh - math.log(2.0 * math.pi ** 2 * p.alpha * sol.xi)) \
        + lg.real
    return ContinuumState(k=float(k), energy=continuum_energy(sol, k), log_prefactor=log_pref,
                          gamma_phase=lg.imag, _sol=sol)


# ---------------------------------------------------------------------------
# Green function


def eta_of_energy(sol: MorseSolution, E: float) -> float:
    p = sol.params
    gap = threshold_energy(sol) - E
    if not gap > 0:
        raise InvalidParameters(f"green_function needs E below threshold {threshold_energy(sol)!r}")
    return math.sqrt(gap / sol.coeffs.d) / (p.hbar * p.beta)


def pole_function(sol: MorseSolution, E: float) -> float:
    """``1/Gamma(1/2 + eta - xi)``; vanishes exactly at the bound-state poles of G."""
    eta = eta_of_energy(sol, E)
    return specfun.rgamma(0.5 + eta - sol.xi)


def green_function(sol: MorseSolution, E: float, x1r, x2r):
    """Resolvent ``(H_rel + E_com - E)^{-1}(x1r, x2r)`` below threshold.

    ``G = Gamma(1/2+eta-xi) / (hbar^2 d beta Gamma(1+2 eta))
          * z_<^{-1/2} W_{xi,eta}(z_<) * z_>^{-1/2} M_{xi,eta}(z_>)``

    where ``z_<`` belongs to the smaller and ``z_>`` to the larger of the two
    positions.  Normalized so ``-hbar^2 d dG/dx`` jumps by ``-1`` at ``x = x'``;
    near a pole ``G ~ -psi_n(x) psi_n(x') / (E - E_n)``.

    Raises
    ------
    PoleError
        If ``1/2 + eta - xi`` is within 1e-9 of a non-positive integer.
    """
    p = sol.params
    eta = eta_of_energy(sol, E)
    a = 0.5 + eta - sol.xi
    if a <= 0 and abs(a - round(a)) < 1e-9:
        raise PoleError(f"E={E!r} sits on the bound-state pole n={-round(a)}")
    x1 = np.asarray(x1r, dtype=float)
    x2 = np.asarray(x2r, dtype=float)
    lo = np.minimum(x1, x2)
    hi = np.maximum(x1, x2)
    z_lo = _z_of_x(sol, lo)
    z_hi = _z_of_x(sol, hi)
    lg = specfun.log_gamma(a) - specfun.log_gamma(1.0 + 2.0 * eta)
    pref = cmath.exp(lg).real / (p.hbar ** 2 * sol.coeffs.d * p.beta)
    w = specfun.whittaker_w(sol.xi, eta, np.ravel(z_lo)).reshape(np.shape(z_lo))
    m = specfun.whittaker_m(sol.xi, eta, np.ravel(z_hi)).reshape(np.shape(z_hi))
    out = pref * w * m / np.sqrt(z_lo * z_hi)
    return out if np.ndim(out) else float(out)


def green_poles(sol: MorseSolution, n_scan: int = 4000, xtol: float = 1e-13) -> np.ndarray:
    """Locate the poles of ``G`` below threshold numerically.

    Scans ``1/Gamma(1/2 + eta - xi)`` on a uniform energy grid between the
    well bottom and threshold and refines every sign change with Brent's
    method.  Independent of the closed-form level formula, so it doubles as
    a check on it.
    """
    lo = com_energy(sol)
    hi = threshold_energy(sol)
    span = hi - lo
    grid = lo + span * np.linspace(1e-12, 1.0 - 1e-12, n_scan)
    vals = np.array([pole_function(sol, E) for E in grid])
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        if vals[i] == 0.0:
            roots.append(grid[i])
            continue
        roots.append(brentq(lambda E: pole_function(sol, E), grid[i], grid[i + 1],
                            xtol=xtol * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps))
    return np.unique(np.array(roots))


# ---------------------------------------------------------------------------
# potentials


def morse_potential(lam: float, alpha: float, beta: float) -> Callable:
    def V(x):
        return lam * (1.0 - alpha * np.exp(-beta * np.asarray(x, dtype=float))) ** 2
    return V


def potential(sol_or_params, x_r):
    """``lam * (1 - alpha exp(-beta x_r))**2``."""
    p = sol_or_params.params if isinstance(sol_or_params, MorseSolution) else sol_or_params
    return morse_potential(p.lam, p.alpha, p.beta)(x_r)


def with_custom_potential(params: SystemParams, V: Callable, domain: tuple[float, float] | None = None
                          ) -> EffectiveRelativeProblem:
    """Relative problem with the coupled effective mass ``1/(2d)`` and an arbitrary ``V``.

    No analytic solution is attached; the result is meant for
    :func:`kinpath.oracles.fd_spectrum`.
    """
    c = reduce(params)
    if domain is None:
        x0 = math.log(params.alpha) / params.beta
        domain = (x0 - 20.0 / params.beta, x0 + 40.0 / params.beta)
    return EffectiveRelativeProblem(mass_eff=1.0 / (2.0 * c.d), potential=V, domain=tuple(domain),
                                    hbar=params.hbar)


def effective_problem(sol: MorseSolution) -> EffectiveRelativeProblem:
    p = sol.params
    return with_custom_potential(p, morse_potential(p.lam, p.alpha, p.beta), sol.domain())
