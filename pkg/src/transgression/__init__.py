"""Exact verification of theta-function characteristic forms and their
Chern-Simons transgressions, with q-series over Q(zeta_24) and a formal pi."""

__version__ = "0.1.0"

from .errors import (BranchError, DegenerateScenario, FlatnessViolation, InvalidInverse, NotInRing,
                     NotInvertible, NotNilpotent, ScenarioError, ShapeError, TransgressionError)
from .exactscalar import I, PI, CycloRational, QSeries, Scalar
from .thetalib import WSeries, modular_table, theta_expand, theta_logderiv
from .formcalc import ConnectionPair, Form, FormSeries, MatrixForm, curvature, random_pair
from .charforms import GenusKind, phi_form, two_route
from .csforms import cs_form, exactness_residual, gen_flat_pair

__all__ = [
    "__version__", "BranchError", "DegenerateScenario", "FlatnessViolation", "InvalidInverse",
    "NotInRing", "NotInvertible", "NotNilpotent", "ScenarioError", "ShapeError", "TransgressionError",
    "I", "PI", "CycloRational", "QSeries", "Scalar", "WSeries", "modular_table", "theta_expand",
    "theta_logderiv", "ConnectionPair", "Form", "FormSeries", "MatrixForm", "curvature", "random_pair",
    "GenusKind", "phi_form", "two_route", "cs_form", "exactness_residual", "gen_flat_pair",
]
