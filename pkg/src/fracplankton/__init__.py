"""Fractional plankton-oxygen dynamics: solvers, analytic bounds and well-posedness checks."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
