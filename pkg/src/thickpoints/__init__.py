"""Thick points of planar and spherical Brownian motion: exact laws,
Monte Carlo path engines, excursion bookkeeping, a critical Galton-Watson
solver, and an experiment harness.

Hot path loops live in a compiled extension with a numpy fallback; see
thickpoints._backend.BACKEND for which one is active.
"""

from ._backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
