"""Singular integrals on sampled C^{1,alpha} curves and finite doubling spaces."""

from ._util import Estimate, ValidationError

__version__ = "0.1.0"
__all__ = ["Estimate", "ValidationError", "__version__"]
