"""Isogeometric Poisson solver on scaled-boundary parametrizations."""
from .assembly import (
    DofMap,
    LinearSystem,
    SourceField,
    apply_dirichlet,
    assemble,
    assemble_separated,
    assemble_standard,
    build_dofmap,
)
from .geometry import (
    GeometryMap,
    build_sb_map,
    metric,
    ray_factors,
    refine,
    refine_uniform,
    validate_regularity,
)
from .radial import (
    HamiltonianSpectrum,
    RadialODE,
    assemble_radial_matrices,
    build_hamiltonian,
    eigen_split,
    solve_laplace_modal,
)
from .solver import (
    ConvergenceRow,
    DiscreteSolution,
    ManufacturedProblem,
    convergence_study,
    l2_error,
    sample_field,
    solve,
)
from .splines import CurveGeometry, KnotVector

__version__ = "0.1.0"

__all__ = [
    "DofMap",
    "LinearSystem",
    "SourceField",
    "apply_dirichlet",
    "assemble",
    "assemble_separated",
    "assemble_standard",
    "build_dofmap",
    "GeometryMap",
    "build_sb_map",
    "metric",
    "ray_factors",
    "refine",
    "refine_uniform",
    "validate_regularity",
    "HamiltonianSpectrum",
    "RadialODE",
    "assemble_radial_matrices",
    "build_hamiltonian",
    "eigen_split",
    "solve_laplace_modal",
    "ConvergenceRow",
    "DiscreteSolution",
    "ManufacturedProblem",
    "convergence_study",
    "l2_error",
    "sample_field",
    "solve",
    "CurveGeometry",
    "KnotVector",
]
