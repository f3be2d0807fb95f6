"""slipchannel: a numerical laboratory for incompressible channel flow with
Navier slip walls.

Staggered-grid discretization whose divergence/gradient pair is an exact
adjoint pair, dual-space projection machinery reconstructing the pressure
associated with a velocity trajectory as a four-part split, and quadrature
probes for the interior representation of the pressure gradient.
"""

from .grid import BoundaryData, Grid, build_grid
from .fields import (Position, ScalarField, TensorField, VectorField,
                     curl_of_potential, scalar_from_function,
                     vector_from_functions, zero_scalar, zero_vector)
from .calculus import (advect, diff, divergence, dot, gradient,
                       gradient_tensor, grad_norm_l2, integrate,
                       interior_laplacian_defect, laplacian, norm,
                       sym_gradient, trace, vector_laplacian)
from .poisson import helmholtz_project, solve_neumann

__all__ = [
    "BoundaryData", "Grid", "build_grid",
    "Position", "ScalarField", "TensorField", "VectorField",
    "curl_of_potential", "scalar_from_function", "vector_from_functions",
    "zero_scalar", "zero_vector",
    "advect", "diff", "divergence", "dot", "gradient", "gradient_tensor",
    "grad_norm_l2", "integrate", "interior_laplacian_defect", "laplacian",
    "norm", "sym_gradient", "trace", "vector_laplacian",
    "helmholtz_project", "solve_neumann",
]

__version__ = "0.1.0"
