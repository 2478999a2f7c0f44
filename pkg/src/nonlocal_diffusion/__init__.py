"""Radial finite-volume toolkit for ``u_t - div(a(l_r(u)) grad u) = f`` on a
ball, with ``l_r(u)(x)`` the integral of ``g u`` over the part of the domain
within distance ``r`` of ``x``.
"""
__version__ = "0.1.0"

from .branch import SolutionBranch, UniquenessReport, trace_branch, uniqueness_condition
from .coefficients import (
    CoefficientSpec,
    clipped_reciprocal,
    constant,
    logistic,
    piecewise_linear,
    polynomial,
    staircase_coefficient,
)
from .estimates import (
    DEFAULT_K,
    absorbing_radius,
    dual_norm,
    gradient_transfer_ratio,
    gronwall_factor,
    moser_bounds,
    poincare_constants,
)
from .fields import Field, distance, grad_norm, l2_norm
from .geometry import RadialMesh, ball_domain_measure, build_radial_mesh, shell_weight, sphere_measure
from .nonlocal_op import KernelSpec, eval_lr, lr_bound_report, lr_matrix
from .parabolic import TimeSeries, integrate, sandwich_bounds, steady_state_detect, step_imex
from .stability import StabilityReport, stability_margin
from .stationary import (
    ProblemSpec,
    StationarySolution,
    enumerate_rd_solutions,
    multi_solution_search,
    picard_stationary,
    solve_laplace,
    solve_linear_radial,
)

__all__ = [name for name in dir() if not name.startswith("_")]
