"""Geodesic flows of left-invariant metrics on Lie groups via the Euler-Arnold equation."""
from .errors import DegenerateForm, EALabError, InvalidInput, InvalidRealization, NotFound, NotLoxodromic
from .flow import Trajectory, geodesic_field, integrate
from .lie import LieAlgebra, bracket, direct_sum, jacobi_residual, killing_form, load_builtin
from .metric import BilinearForm, MetricAlgebra, adstar_matrix, builtin_metric, signature
from .solver import completeness_classify, find_special_directions

__version__ = "0.1.0"

__all__ = [
    "BilinearForm", "DegenerateForm", "EALabError", "InvalidInput", "InvalidRealization", "LieAlgebra",
    "MetricAlgebra", "NotFound", "NotLoxodromic", "Trajectory", "adstar_matrix", "bracket", "builtin_metric",
    "completeness_classify", "direct_sum", "find_special_directions", "geodesic_field", "integrate",
    "jacobi_residual", "killing_form", "load_builtin", "signature",
]
