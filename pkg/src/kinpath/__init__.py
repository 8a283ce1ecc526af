"""Kinetically coupled two-body systems: Morse bound states, Green function,
coupled-oscillator propagators and the numerical oracles that check them."""
from . import errors, morse, normal_modes, oracles, params, propagator, specfun
from .errors import (CausticError, DimensionMismatch, IndexOutOfRange, InvalidParameters,
                     KinpathError, MemoryGuard, NoConvergence, OverflowSignal, PoleError,
                     SingularMatrix)
from .params import SystemParams, reduce

__version__ = "0.1.0"

__all__ = [
    "errors", "morse", "normal_modes", "oracles", "params", "propagator", "specfun",
    "SystemParams", "reduce",
    "KinpathError", "InvalidParameters", "PoleError", "NoConvergence", "OverflowSignal",
    "CausticError", "DimensionMismatch", "IndexOutOfRange", "SingularMatrix", "MemoryGuard",
]
