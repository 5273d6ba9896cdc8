"""Pseudo-spectral solver and modulus-of-continuity certifier for the
dissipative generalized surface quasi-geostrophic equation on the torus."""

__version__ = "0.1.0"

from .errors import (BlowUpError, CFLViolation, GsqgError, NumericalError,  # noqa: E402
                     ParameterError, QuadratureError)

__all__ = ["__version__", "GsqgError", "ParameterError", "NumericalError",
           "QuadratureError", "CFLViolation", "BlowUpError"]
