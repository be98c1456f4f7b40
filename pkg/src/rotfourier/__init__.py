"""Verified numerics for Fourier-invariant subalgebras of rotation algebras."""

__version__ = "0.1.0"

from . import diophantine  # noqa: F401  registers the demonstration constants
