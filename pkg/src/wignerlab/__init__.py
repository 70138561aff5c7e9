"""Linearized Schrodinger, Wigner and Liouville inverse problems: solvers,
Fredholm kernels, and the semiclassical comparison of the kernels."""

__version__ = "0.1.0"

from .core import (ComplexField, GaussianSpec, PhaseField, PhaseGrid, Polynomial, Sinusoid,
                   gaussian_packet, gaussian_phase_field, make_phase_grid, dyadic_epsilon)
from .errors import (ConfigurationError, DegenerateMatrixError, GridMismatchError,
                     IndeterminateResidualError, NumericalBlowupError, OracleCapError,
                     WignerLabError)
from .liouville import solve_liouville, solve_liouville_perturbed
from .representatives import (check_wigner_schrodinger_identity, rep_liouville,
                              rep_schrodinger, rep_wigner, rep_wigner_oracle)
from .schrodinger import solve_schrodinger, solve_schrodinger_perturbed
from .wigner import solve_wigner, solve_wigner_perturbed, wigner_transform

__all__ = [
    "ComplexField", "GaussianSpec", "PhaseField", "PhaseGrid", "Polynomial", "Sinusoid",
    "gaussian_packet", "gaussian_phase_field", "make_phase_grid", "dyadic_epsilon",
    "ConfigurationError", "DegenerateMatrixError", "GridMismatchError",
    "IndeterminateResidualError", "NumericalBlowupError", "OracleCapError", "WignerLabError",
    "solve_liouville", "solve_liouville_perturbed", "check_wigner_schrodinger_identity",
    "rep_liouville", "rep_schrodinger", "rep_wigner", "rep_wigner_oracle",
    "solve_schrodinger", "solve_schrodinger_perturbed", "solve_wigner",
    "solve_wigner_perturbed", "wigner_transform",
]
