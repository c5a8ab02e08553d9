"""Solver and verification suite for the quasilinear conduction-radiation
equation with periodic composite coefficients and mixed boundary conditions."""

__version__ = "0.1.0"

from .assemble import (DiscreteField, LinearSystem, apply_quadrature,
                       assemble_system, constant_field, residual)
from .fixedpoint import (IterationReport, IterationStatus, clamp,
                         discover_T_star, picard_step, solve_nonlinear)
from .geometry import (Mesh, build_rect_mesh, interior_subdomain, tag_boundary,
                       write_mesh)
from .linsolve import SolveStats, cg_solve
from .problem import (ProblemSpec, TensorField, eval_A, ellipticity_interval,
                      periodic_wrap)
from .verify import (ExperimentReport, brute_force_1d, convergence_study,
                     epsilon_sweep, holder_diagnostic,
                     interior_gradient_experiment, linf_bound_check,
                     mms_problem, uniqueness_probe)

__all__ = [
    "DiscreteField", "LinearSystem", "apply_quadrature", "assemble_system",
    "constant_field", "residual", "IterationReport", "IterationStatus",
    "clamp", "discover_T_star", "picard_step", "solve_nonlinear", "Mesh",
    "build_rect_mesh", "interior_subdomain", "tag_boundary", "write_mesh",
    "SolveStats", "cg_solve", "ProblemSpec", "TensorField", "eval_A",
    "ellipticity_interval", "periodic_wrap", "ExperimentReport",
    "brute_force_1d", "convergence_study", "epsilon_sweep",
    "holder_diagnostic", "interior_gradient_experiment", "linf_bound_check",
    "mms_problem", "uniqueness_probe",
]
