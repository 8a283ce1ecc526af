"""Exact propagators of quadratic systems in normal coordinates.

All modes have unit mass (the masses live in ``C``), so a mode of squared
frequency ``w2`` contributes the oscillator kernel

    sqrt(1 / (2 pi i hbar s)) exp{ i [(x1^2 + x2^2) c - 2 x1 x2] / (2 hbar s) }

with ``s = sin(wT)/w`` and ``c = cos(wT)``.  In imaginary time ``T -> -i tau``
this becomes the positive Mehler kernel with ``sinh``/``cosh``.  Writing the
kernel through ``s`` keeps the free limit ``w -> 0`` (``s -> T``) and
inverted modes ``w2 < 0`` on the same code path.

The coupled kernel is ``|det C| prod_k K_k(C phi'', C phi')``; the Jacobian
restores ``K -> delta(phi'' - phi')`` as ``T -> 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CausticError, DimensionMismatch, InvalidParameters, OverflowSignal
from .normal_modes import NormalModeBasis
from .specfun import hermite_functions

__all__ = [
    "KernelValue",
    "SpectralTruncation",
    "REGIMES",
    "oscillator_kernel",
    "coupled_kernel",
    "coupled_amplitude",
    "classical_action",
    "mvh_determinant",
    "energy_level",
    "eigenfunction",
    "spectral_kernel",
    "EIGENFUNCTION_MAX_ORDER",
    "OVERFLOW_ARG",
]

REGIMES = ("real", "imaginary")
EIGENFUNCTION_MAX_ORDER = 60
OVERFLOW_ARG = 700.0
_CAUSTIC_TOL = 1e-10


@dataclass(frozen=True)
class KernelValue:
    amplitude: complex
    phi1: np.ndarray
    phi2: np.ndarray
    T: float
    regime: str


@dataclass(frozen=True)
class SpectralTruncation:
    n_max: int
    regime: str = "imaginary"

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise InvalidParameters(f"n_max >= 0 violated (n_max={self.n_max!r})")
        _check_regime(self.regime)


def _check_regime(regime: str) -> None:
    if regime not in REGIMES:
        raise InvalidParameters(f"regime must be one of {REGIMES}, got {regime!r}")


def _sinc_like(w2: float, T: float, regime: str):
    """Return ``(s, c, maslov)`` for one mode.

    ``s`` generalizes ``sin(wT)/w`` (real time) or ``sinh(w tau)/w``
    (imaginary time) to any sign of ``w2``; ``maslov`` counts the focal
    points passed in real time.
    """
    if not T > 0:
        raise InvalidParameters(f"T > 0 violated (T={T!r})")
    w = math.sqrt(abs(w2))
    x = w * T
    # effective oscillation: real time with w2 > 0 or imaginary time with w2 < 0
    oscillating = (w2 > 0) == (regime == "real")
    if w2 == 0.0 or x < 1e-8:
        # two-term series of sin(x)/x or sinh(x)/x
        sgn = -1.0 if oscillating else 1.0
        return T * (1.0 + sgn * x * x / 6.0), 1.0 + sgn * x * x / 2.0, 0
    if oscillating:
        k = round(x / math.pi)
        if k >= 1 and abs(x - k * math.pi) < _CAUSTIC_TOL * max(1.0, x):
            raise CausticError(f"caustic: omega*T = {x!r} is within tolerance of {k}*pi")
        return math.sin(x) / w, math.cos(x), int(math.floor(x / math.pi))
    if x > OVERFLOW_ARG:
        raise OverflowSignal(f"omega*tau = {x!r} exceeds {OVERFLOW_ARG}; kernel under/overflows")
    return math.sinh(x) / w, math.cosh(x), 0


def _mode_kernel(w2: float, T: float, x1, x2, hbar: float, regime: str):
    s, c, maslov = _sinc_like(w2, T, regime)
    quad = (np.square(x1) + np.square(x2)) * c - 2.0 * np.asarray(x1) * np.asarray(x2)
    if regime == "imaginary":
        return np.sqrt(1.0 / (2.0 * math.pi * hbar * s)) * np.exp(-quad / (2.0 * hbar * s))
    pref = (2.0 * math.pi * hbar * abs(s)) ** -0.5 * np.exp(-0.25j * math.pi - 0.5j * math.pi * maslov)
    return pref * np.exp(1j * quad / (2.0 * hbar * s))


def oscillator_kernel(omega: float, T: float, x1, x2, hbar: float = 1.0, regime: str = "real"):
    """Unit-mass harmonic oscillator propagator ``K(x2, x1; T)``.

    Parameters
    ----------
    omega : float
        Angular frequency, ``>= 0``.  ``0`` gives the free particle.
    T : float
        Duration (real time) or ``tau`` (imaginary time), ``> 0``.
    x1, x2 : array_like
        Initial and final positions; broadcast together.
    regime : {"real", "imaginary"}

    Returns
    -------
    complex or ndarray
        Real time carries the Maslov phase ``exp(-i pi/2)`` per focal point.

    Raises
    ------
    CausticError
        Real time with ``omega*T`` a positive multiple of ``pi``.
    OverflowSignal
        Imaginary time with ``omega*tau > 700``.
    """
    _check_regime(regime)
    if not (np.isfinite(omega) and omega >= 0):
        raise InvalidParameters(f"omega >= 0 violated (omega={omega!r})")
    out = _mode_kernel(float(omega) ** 2, float(T), x1, x2, hbar, regime)
    return out.item() if np.ndim(out) == 0 else out


def _check_vec(basis: NormalModeBasis, phi, name: str) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1:] != (basis.n,):
        raise DimensionMismatch(f"{name} must end in an axis of length {basis.n}, got shape {phi.shape}")
    return phi


def coupled_amplitude(basis: NormalModeBasis, phi1, phi2, T: float, hbar: float = 1.0,
                      regime: str = "real"):
    """Vectorized coupled kernel over batches of endpoints ``(..., n)``."""
    _check_regime(regime)
    phi1 = _check_vec(basis, phi1, "phi1")
    phi2 = _check_vec(basis, phi2, "phi2")
    xi1 = phi1 @ basis.C.T
    xi2 = phi2 @ basis.C.T
    out = basis.det_C
    for k in range(basis.n):
        out = out * _mode_kernel(float(basis.omega2[k]), T, xi1[..., k], xi2[..., k], hbar, regime)
    return out


def coupled_kernel(basis: NormalModeBasis, phi1, phi2, T: float, hbar: float = 1.0,
                   regime: str = "real") -> KernelValue:
    """Propagator ``K(phi2, phi1; T)`` of the quadratic system behind ``basis``."""
    phi1 = _check_vec(basis, phi1, "phi1")
    phi2 = _check_vec(basis, phi2, "phi2")
    if phi1.ndim != 1 or phi2.ndim != 1:
        raise DimensionMismatch("coupled_kernel takes single endpoints; use coupled_amplitude for batches")
    amp = complex(coupled_amplitude(basis, phi1, phi2, T, hbar, regime))
    return KernelValue(amplitude=amp, phi1=phi1.copy(), phi2=phi2.copy(), T=float(T), regime=regime)


def classical_action(basis: NormalModeBasis, phi1, phi2, T: float, regime: str = "real"):
    """Action of the classical path from ``phi1`` to ``phi2`` in time ``T``.

    In imaginary time this is the Euclidean action, so that the kernel is
    ``prefactor * exp(-S_E / hbar)``.
    """
    _check_regime(regime)
    xi1 = _check_vec(basis, phi1, "phi1") @ basis.C.T
    xi2 = _check_vec(basis, phi2, "phi2") @ basis.C.T
    total = 0.0
    for k in range(basis.n):
        s, c, _ = _sinc_like(float(basis.omega2[k]), T, regime)
        a, b = xi1[..., k], xi2[..., k]
        total = total + ((a * a + b * b) * c - 2.0 * a * b) / (2.0 * s)
    return total


def mvh_determinant(basis: NormalModeBasis, T: float, regime: str = "real") -> float:
    """``det(-d^2 S / dphi'' dphi')`` evaluated as ``det(C)^2 prod_k 1/s_k``.

    For imaginary time this is the same determinant of the Euclidean action
    with the sign flipped, so that it stays positive.
    """
    _check_regime(regime)
    out = basis.det_C ** 2
    for k in range(basis.n):
        s, _, _ = _sinc_like(float(basis.omega2[k]), T, regime)
        out /= s
    return float(out)


def _quanta(basis: NormalModeBasis, quanta) -> np.ndarray:
    q = np.atleast_1d(np.asarray(quanta))
    if q.shape != (basis.n,):
        raise DimensionMismatch(f"need {basis.n} quantum numbers, got {q.tolist()}")
    if np.any(q < 0) or np.any(q != np.round(q)):
        raise InvalidParameters(f"quantum numbers must be non-negative integers, got {q.tolist()}")
    return q.astype(int)


def _require_stable(basis: NormalModeBasis) -> np.ndarray:
    if np.any(basis.omega2 <= 0):
        raise InvalidParameters("stationary states need every omega^2 > 0")
    return np.sqrt(basis.omega2)


def energy_level(basis: NormalModeBasis, quanta: Sequence[int], hbar: float = 1.0) -> float:
    """``hbar * sum_k w_k (n_k + 1/2)``."""
    q = _quanta(basis, quanta)
    w = _require_stable(basis)
    return float(hbar * np.sum(w * (q + 0.5)))


def eigenfunction(basis: NormalModeBasis, quanta: Sequence[int], phi, hbar: float = 1.0):
    """Stationary state ``Psi_{n_1..n_k}(phi)`` normalized over ``phi``.

    Product of unit-mass oscillator states in ``xi = C phi`` times
    ``|det C|^(1/2)``.
    """
    q = _quanta(basis, quanta)
    if q.max() > EIGENFUNCTION_MAX_ORDER:
        raise OverflowSignal(f"quantum number {q.max()} exceeds cap {EIGENFUNCTION_MAX_ORDER}")
    w = _require_stable(basis)
    xi = _check_vec(basis, phi, "phi") @ basis.C.T
    out = math.sqrt(basis.det_C)
    for k in range(basis.n):
        scale = math.sqrt(w[k] / hbar)
        out = out * math.sqrt(scale) * hermite_functions(int(q[k]), scale * xi[..., k])[-1]
    return out


def _mode_sum(w: float, n_max: int, a, b, T: float, hbar: float, regime: str):
    scale = math.sqrt(w / hbar)
    ha = hermite_functions(n_max, scale * np.asarray(a))
    hb = hermite_functions(n_max, scale * np.asarray(b))
    n = np.arange(n_max + 1).reshape((-1,) + (1,) * ha[0].ndim)
    if regime == "imaginary":
        phase = np.exp(-w * (n + 0.5) * T)
    else:
        phase = np.exp(-1j * w * (n + 0.5) * T)
    return scale * np.sum(ha * hb * phase, axis=0)


def spectral_kernel(basis: NormalModeBasis, trunc: SpectralTruncation, phi1, phi2, T: float,
                    hbar: float = 1.0):
    """Eigenfunction expansion of the kernel truncated at ``n_k <= n_max``.

    Factorizes over modes, so the cost is ``n * n_max`` rather than
    ``n_max ** n``.
    """
    w = _require_stable(basis)
    if not T > 0:
        raise InvalidParameters(f"T > 0 violated (T={T!r})")
    xi1 = _check_vec(basis, phi1, "phi1") @ basis.C.T
    xi2 = _check_vec(basis, phi2, "phi2") @ basis.C.T
    out = complex(basis.det_C)
    for k in range(basis.n):
        out = out * _mode_sum(float(w[k]), int(trunc.n_max), xi1[..., k], xi2[..., k], T, hbar, trunc.regime)
    return complex(out) if np.ndim(out) == 0 else out
