"""Continuation of ``r -> u_r`` over ``[0, d]`` and the uniqueness condition
``C1 |g|_2 |f|_2 |a'|_{inf,[-eps, mu_d+eps]} / a(mu_d)^2 < 1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .estimates import ConstantsTable, poincare_constants
from .fields import Field, distance, l2_norm
from .stationary import (
    ProblemSpec,
    StationarySolution,
    enumerate_rd_solutions,
    picard_stationary,
    solve_laplace,
)

log = logging.getLogger(__name__)

DEFAULT_BRANCH_POINTS = 33


@dataclass(frozen=True)
class UniquenessReport:
    lhs: float
    holds: bool
    C1: float
    epsilon: float
    mu_d: float
    a_prime_sup: float


def default_epsilon(mu_d: float) -> float:
    return max(1e-3 * mu_d, 1e-6)


def uniqueness_condition(problem: ProblemSpec, mu_d: float, epsilon: float | None = None,
                         constants: ConstantsTable | None = None) -> UniquenessReport:
    if mu_d < 0:
        raise ValueError("mu_d must be nonnegative")
    eps = default_epsilon(mu_d) if epsilon is None else float(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    constants = constants or poincare_constants(problem.mesh)
    sup = problem.coeff.sup_derivative(-eps, mu_d + eps)
    lhs = constants.C1 * problem.kernel.l2_norm * l2_norm(problem.f) * sup / float(problem.coeff(mu_d)) ** 2
    return UniquenessReport(float(lhs), bool(lhs < 1), constants.C1, eps, float(mu_d), sup)


@dataclass
class SolutionBranch:
    entries: list[tuple[float, StationarySolution]]
    monotone_flags: list[bool]
    endpoint_match: dict[str, float]
    slack: float
    lr_in_range: list[bool] = field(default_factory=list)
    mu_d: float = float("nan")

    @property
    def radii(self) -> np.ndarray:
        return np.array([r for r, _ in self.entries])

    @property
    def all_converged(self) -> bool:
        return all(s.converged for _, s in self.entries)

    @property
    def monotonicity_violations(self) -> int:
        return sum(not ok for ok in self.monotone_flags)

    def max_jump(self) -> float:
        """Largest nodewise change between consecutive entries."""
        u = np.array([s.u.values for _, s in self.entries])
        return float(np.max(np.abs(np.diff(u, axis=0))))


def trace_branch(
    problem: ProblemSpec,
    r_grid=None,
    tol: float = 1e-10,
    damping: float = 0.5,
    max_iter: int = 2000,
    start: Field | None = None,
    direction: str = "up",
    warm: bool = True,
) -> SolutionBranch:
    """Solve the stationary problem along ``r_grid`` with warm starts.

    ``direction="up"`` starts at ``r = 0`` from ``phi/a(0)``; ``"down"`` starts
    at ``r = d`` (default seed: the smallest ``r = d`` solution). With
    ``warm=False`` every radius restarts from the seed.
    """
    mesh = problem.mesh
    d = mesh.d
    radii = np.linspace(0.0, d, DEFAULT_BRANCH_POINTS) if r_grid is None else np.asarray(r_grid, dtype=float)
    if radii[0] != 0.0 or not np.isclose(radii[-1], d) or np.any(np.diff(radii) <= 0):
        raise ValueError("r_grid must increase strictly from 0 to d")
    radii[-1] = d

    phi = solve_laplace(problem.f)
    u_zero = phi / float(problem.coeff(0.0))
    roots = enumerate_rd_solutions(problem)
    u_d = roots[0].u_d if roots else None
    mu_d = roots[0].mu if roots else float("nan")

    if direction == "up":
        order = range(len(radii))
        seed = u_zero if start is None else start
    elif direction == "down":
        order = range(len(radii) - 1, -1, -1)
        seed = (u_d if u_d is not None else u_zero) if start is None else start
    else:
        raise ValueError("direction must be 'up' or 'down'")

    solved: dict[int, StationarySolution] = {}
    guess = seed
    for j in order:
        sol = picard_stationary(problem.with_r(radii[j]), guess, damping=damping, tol=tol, max_iter=max_iter)
        if not sol.converged:
            log.warning("branch entry r=%g did not converge", radii[j])
        solved[j] = sol
        guess = sol.u if warm else seed
    entries = [(float(radii[j]), solved[j]) for j in range(len(radii))]

    umax = float(np.max(np.abs(u_d.values))) if u_d is not None else float(np.max(np.abs(u_zero.values)))
    slack = max(tol, 1e-8 * umax)
    flags = [bool(np.all(b.u.values >= a.u.values - slack)) for (_, a), (_, b) in zip(entries, entries[1:])]
    match = {"r0": distance(entries[0][1].u, u_zero)}
    match["rd"] = distance(entries[-1][1].u, u_d) if u_d is not None else float("nan")
    in_range = []
    for _, s in entries:
        lr = s.lr_field.values
        in_range.append(bool(np.all(lr >= -slack) and np.all(lr <= mu_d * (1 + 1e-9) + slack)))
    return SolutionBranch(entries, flags, match, slack, in_range, mu_d)
