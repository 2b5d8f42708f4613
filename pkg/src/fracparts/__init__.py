"""Small fractional parts of polynomial systems: solver, search kernels, experiments."""

__version__ = "0.1.0"
