"""Effective conductivity of periodic media with degenerate phases.

Subpackages:

* ``linalg``     small symmetric eigenproblems, kernels, PSD square roots
* ``laminate``   explicit rank-one laminate formula and structure conditions
* ``cell``       regularized periodic cell problems and delta extrapolation
* ``anomalous``  the two-dimensional anomalous limit: spectral and
                 convolution forms, two-scale profiles, recovery energies
* ``cli``        the ``homoglab`` command-line front end
"""

from . import anomalous, cell, cli, laminate, linalg
from .errors import (AdmissibilityError, ConvergenceError, CrossValidationError,
                     GridTooSmallError, HomoglabError, NumericalError,
                     ValidationError)

__all__ = [
    "anomalous", "cell", "cli", "laminate", "linalg",
    "AdmissibilityError", "ConvergenceError", "CrossValidationError",
    "GridTooSmallError", "HomoglabError", "NumericalError", "ValidationError",
]

__version__ = "0.1.0"
