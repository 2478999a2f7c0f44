"""Discrete stability form
``G(phi) = ∫ a(l_r(u_r)) |grad phi|^2 - ∫ a'(l_r(u_r)) l_r(phi) grad u_r . grad phi``
and its minimum Rayleigh quotient against ``|grad phi|_2^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .branch import default_epsilon
from .estimates import ConstantsTable, poincare_constants
from .fields import l2_norm
from .nonlocal_op import lr_matrix
from .stationary import ProblemSpec, StationarySolution, enumerate_rd_solutions


@dataclass(frozen=True)
class StabilityReport:
    min_rayleigh: float
    stable: bool
    lower_bound_analytic: float
    converged: bool
    iterations: int
    eigenvector: np.ndarray
    bracket: tuple[float, float]


def gradient_matrix(mesh) -> np.ndarray:
    """Face derivatives of the unknowns ``phi_0..phi_{N-1}`` (``phi_N = 0``)."""
    N = mesh.N
    D = np.zeros((N, N))
    idx = np.arange(N)
    D[idx, idx] = -1.0 / mesh.cell_width
    D[idx[:-1], idx[:-1] + 1] = 1.0 / mesh.cell_width
    return D


def stability_forms(sol: StationarySolution, problem: ProblemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric part of the stability form and the gradient form, on nodes ``0..N-1``."""
    mesh = problem.mesh
    lr = sol.lr_field.values
    D = gradient_matrix(mesh)
    w = mesh.interface_areas * mesh.cell_width
    a_face = 0.5 * (problem.coeff(lr[:-1]) + problem.coeff(lr[1:]))
    ap_face = 0.5 * (problem.coeff.derivative(lr[:-1]) + problem.coeff.derivative(lr[1:]))
    du = np.diff(sol.u.values) / mesh.cell_width
    L = lr_matrix(problem.kernel, sol.r if np.isfinite(sol.r) else problem.r)[:, :-1]
    l_face = 0.5 * (L[:-1] + L[1:])
    G = D.T @ (w[:, None] * D)
    B = D.T @ ((w * a_face)[:, None] * D) - D.T @ ((w * ap_face * du)[:, None] * l_face)
    return 0.5 * (B + B.T), G


def _positive_definite(M: np.ndarray) -> bool:
    try:
        cho_factor(M, check_finite=False)
        return True
    except LinAlgError:
        return False


def min_generalized_eigenvalue(B: np.ndarray, G: np.ndarray, rtol: float = 1e-11, max_iter: int = 500):
    """Smallest ``λ`` with ``B x = λ G x`` (``G`` SPD).

    A shift ``σ < λ_min`` is located by bisection on positive-definiteness of
    ``B - σG`` (Cholesky succeeds iff ``σ < λ_min``); shifted inverse power
    iteration from ``σ`` then yields the eigenvector and its Rayleigh quotient.
    """
    diag_ratio = np.diag(B) / np.diag(G)
    hi = float(diag_ratio.min())
    lo = hi - 1.0
    while not _positive_definite(B - lo * G):
        lo = hi - 2.0 * (hi - lo)
    while hi - lo > rtol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if _positive_definite(B - mid * G):
            lo = mid
        else:
            hi = mid
    factor = cho_factor(B - lo * G)
    x = np.ones(B.shape[0])
    theta = np.inf
    converged = False
    for it in range(1, max_iter + 1):
        x = cho_solve(factor, G @ x)
        x /= np.sqrt(x @ G @ x)
        new = float(x @ B @ x)
        if abs(new - theta) <= rtol * max(1.0, abs(new)):
            theta = new
            converged = True
            break
        theta = new
    converged = converged and theta - lo <= 1e3 * rtol * max(1.0, abs(theta))
    return theta, x, it, converged, (lo, hi)


def analytic_lower_bound(sol: StationarySolution, problem: ProblemSpec, mu: float | None = None,
                         constants: ConstantsTable | None = None) -> float:
    """``inf a(l_r(u_r)) - C1 |g|_2 |a'|_{inf,[-eps, mu+eps]} |f|_2 / inf a(l_r(u_r))``."""
    if mu is None:
        roots = enumerate_rd_solutions(problem)
        mu = roots[0].mu if roots else float(np.max(sol.lr_field.values))
    eps = default_epsilon(mu)
    constants = constants or poincare_constants(problem.mesh)
    inf_a = float(np.min(problem.coeff(sol.lr_field.values)))
    sup = problem.coeff.sup_derivative(-eps, mu + eps)
    return inf_a - constants.C1 * problem.kernel.l2_norm * sup * l2_norm(problem.f) / inf_a


def stability_margin(sol: StationarySolution, problem: ProblemSpec, tol: float | None = None,
                     mu: float | None = None, constants: ConstantsTable | None = None) -> StabilityReport:
    """Minimum of ``G(phi) / |grad phi|^2``; stable when it is at least ``-tol`` (default ``1e-8 M``)."""
    B, G = stability_forms(sol, problem)
    theta, x, it, ok, bracket = min_generalized_eigenvalue(B, G)
    tol = 1e-8 * problem.coeff.M if tol is None else tol
    bound = analytic_lower_bound(sol, problem, mu, constants)
    return StabilityReport(theta, bool(theta >= -tol), bound, ok, it, np.append(x, 0.0), bracket)
