"""Stationary problem ``-div(a(l_r(u)) grad u) = f``, ``u = 0`` on the sphere ``|x| = d/2``.

The radial operator is discretised by finite volumes on the cells
``[rho_{i-1/2}, rho_{i+1/2}]``: face fluxes use the arithmetic mean of the
nodal coefficient, so the flux through face ``i+1/2`` equals the source mass
inside it. That balance is solved explicitly by accumulation
(:func:`solve_linear_radial`) and is exactly inverted by
:func:`apply_operator`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import bisect

from .coefficients import CoefficientSpec
from .fields import Field, check_same_mesh, l2_norm
from .geometry import RadialMesh
from .nonlocal_op import KernelSpec, eval_lr

log = logging.getLogger(__name__)

POSITIVITY_FLOOR = 1e-300


@dataclass(frozen=True)
class ProblemSpec:
    mesh: RadialMesh
    f: Field
    kernel: KernelSpec
    coeff: CoefficientSpec
    r: float
    u0: Field | None = None

    def __post_init__(self):
        fields = [self.f, self.kernel.g] + ([self.u0] if self.u0 is not None else [])
        if check_same_mesh(*fields) != self.mesh:
            raise ValueError("problem fields are not on the problem mesh")
        if not 0 <= self.r <= self.mesh.d * (1 + 1e-12):
            raise ValueError(f"r={self.r} outside [0, d]")

    def with_r(self, r: float) -> "ProblemSpec":
        return ProblemSpec(self.mesh, self.f, self.kernel, self.coeff, float(r), self.u0)

    def with_f(self, f: Field) -> "ProblemSpec":
        return ProblemSpec(self.mesh, f, self.kernel, self.coeff, self.r, self.u0)

    def with_u0(self, u0: Field) -> "ProblemSpec":
        return ProblemSpec(self.mesh, self.f, self.kernel, self.coeff, self.r, u0)

    def nonnegative_data(self) -> bool:
        return bool(np.all(self.f.values >= 0) and np.all(self.kernel.g.values >= 0))


@dataclass(frozen=True)
class StationarySolution:
    u: Field
    lr_field: Field
    iterations: int
    residual: float
    converged: bool
    r: float = float("nan")


@dataclass(frozen=True)
class BifurcationRoot:
    mu: float
    bracket: tuple[float, float]
    u_d: Field
    equation_residual: float


def face_average(values: np.ndarray) -> np.ndarray:
    return 0.5 * (values[:-1] + values[1:])


def face_fluxes(A: Field, u: Field) -> np.ndarray:
    """Outward flux ``-S A u'`` through each face ``rho_{i+1/2}``."""
    mesh = check_same_mesh(A, u)
    return -mesh.interface_areas * face_average(A.values) * np.diff(u.values) / mesh.cell_width


def solve_linear_radial(A: Field, f: Field) -> Field:
    """Radial solution of ``-div(A grad u) = f`` with ``u(d/2) = 0``.

    ``u(rho) = ∫_rho^{d/2} t^(1-n) F(t) / A(t) dt`` with ``F(t) = ∫_0^t s^(n-1) f(s) ds``;
    ``F`` is accumulated over cells and the outer integral is taken cell by cell.
    """
    mesh = check_same_mesh(A, f)
    if np.any(A.values < POSITIVITY_FLOOR):
        raise ValueError("coefficient must be positive at every node")
    mass = np.cumsum(mesh.cell_volumes[:-1] * f.values[:-1])
    drops = mesh.cell_width * mass / (mesh.interface_areas * face_average(A.values))
    u = np.zeros(mesh.size)
    u[:-1] = np.cumsum(drops[::-1])[::-1]
    return Field(mesh, u)


def apply_operator(B: Field, u: Field) -> np.ndarray:
    """Discrete ``-div(B grad u)`` at nodes ``0..N-1`` (the Dirichlet node is excluded)."""
    mesh = check_same_mesh(B, u)
    flux = face_fluxes(B, u)
    inflow = np.concatenate(([0.0], flux[:-1]))
    return (flux - inflow) / mesh.cell_volumes[:-1]


def solve_laplace(f: Field) -> Field:
    return solve_linear_radial(Field.constant(f.mesh, 1.0), f)


def coefficient_field(problem: ProblemSpec, u: Field) -> tuple[Field, Field]:
    """``(a(l_r(u)), l_r(u))``."""
    lr = eval_lr(u, problem.kernel, problem.r)
    return Field(problem.mesh, problem.coeff(lr.values)), lr


def fixed_point_map(problem: ProblemSpec, u: Field) -> Field:
    A, _ = coefficient_field(problem, u)
    return solve_linear_radial(A, problem.f)


def operator_residual(problem: ProblemSpec, u: Field) -> float:
    """Discrete L2 norm of ``-div(a(l_r(u)) grad u) - f`` over the non-Dirichlet cells."""
    A, _ = coefficient_field(problem, u)
    res = apply_operator(A, u) - problem.f.values[:-1]
    return float(np.sqrt(np.dot(problem.mesh.cell_volumes[:-1], res**2)))


def picard_stationary(
    problem: ProblemSpec,
    u_init: Field | None = None,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> StationarySolution:
    """Damped Picard iteration ``u <- (1-λ) u + λ T(u)``.

    Stops at the first iterate whose fixed-point residual ``|T(u) - u|_2`` is
    at most ``tol`` and returns that iterate. Non-convergence is reported
    through ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    u = Field.zeros(problem.mesh) if u_init is None else u_init
    check_same_mesh(u, problem.f)
    residual = np.inf
    for it in range(1, max_iter + 1):
        Tu = fixed_point_map(problem, u)
        residual = l2_norm(Tu - u)
        if residual <= tol:
            _, lr = coefficient_field(problem, u)
            return StationarySolution(u, lr, it, residual, True, problem.r)
        u = u * (1 - damping) + Tu * damping
    log.warning("Picard did not converge at r=%g: residual %.3e after %d iterations", problem.r, residual, max_iter)
    _, lr = coefficient_field(problem, u)
    return StationarySolution(u, lr, max_iter, residual, False, problem.r)


@dataclass
class RootScan:
    """Roots of ``mu a(mu) = c`` plus the scan trace; behaves as a sequence of roots."""

    c: float
    phi: Field
    mu_grid: np.ndarray
    scan_values: np.ndarray
    roots: list[BifurcationRoot] = field(default_factory=list)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]

    def __iter__(self):
        return iter(self.roots)


def rd_constant(problem: ProblemSpec) -> tuple[float, Field]:
    """``c = l_d(phi)`` (spatially constant) and ``phi`` with ``-Δphi = f``."""
    phi = solve_laplace(problem.f)
    lr = eval_lr(phi, problem.kernel, problem.mesh.d).values
    return float(np.mean(lr)), phi


def enumerate_rd_solutions(
    problem: ProblemSpec,
    mu_max: float | None = None,
    grid_points: int = 10_000,
    xtol: float = 1e-12,
) -> RootScan:
    """All transversal roots of ``mu a(mu) = l_d(phi)`` on ``[0, mu_max]``.

    Each root gives the ``r = d`` solution ``u_d = phi / a(mu)``. Roots within
    one scan cell of each other are merged; tangential roots are missed.
    """
    c, phi = rd_constant(problem)
    a = problem.coeff
    if mu_max is None:
        mu_max = 2.0 * abs(c) / a.m if c != 0 else 1.0
    if mu_max <= 0:
        raise ValueError("mu_max must be positive")
    mu = np.linspace(0.0, mu_max, grid_points)
    h = mu * a(mu) - c
    scan = RootScan(c=c, phi=phi, mu_grid=mu, scan_values=h)

    def eq(x):
        return float(x * a(x) - c)

    cell = mu[1] - mu[0]
    found = []
    for k in range(grid_points - 1):
        if h[k] == 0.0:
            found.append((mu[k], (mu[k], mu[k])))
        elif h[k] * h[k + 1] < 0:
            root = bisect(eq, mu[k], mu[k + 1], xtol=xtol, maxiter=200)
            found.append((root, (mu[k], mu[k + 1])))
    if h[-1] == 0.0:
        found.append((mu[-1], (mu[-1], mu[-1])))
    merged = []
    for root, bracket in found:
        if merged and root - merged[-1][0] < cell:
            continue
        merged.append((root, bracket))
    for root, bracket in merged:
        scan.roots.append(
            BifurcationRoot(mu=float(root), bracket=bracket, u_d=phi / float(a(root)), equation_residual=abs(eq(root)))
        )
    if not scan.roots:
        log.info("no sign change of mu a(mu) - c on [0, %g] (c=%g)", mu_max, c)
    return scan


@dataclass(frozen=True)
class PairReport:
    index: int
    lower: float
    upper: float
    target: tuple[float, float]
    inclusion_ok: bool
    extremum_ok: bool
    solution: StationarySolution | None = None
    lr_within: bool | None = None

    @property
    def satisfied(self) -> bool:
        return self.inclusion_ok and self.extremum_ok

    def describe(self) -> str:
        status = "ok" if self.satisfied else "violated"
        why = []
        if not self.inclusion_ok:
            why.append(f"I_r not inside [{self.target[0]:.6g}, {self.target[1]:.6g}]")
        if not self.extremum_ok:
            why.append(f"a not max at {self.lower:.6g} / min at {self.upper:.6g}")
        return f"pair {self.index} [{self.lower:.6g}, {self.upper:.6g}]: {status}" + (
            " (" + "; ".join(why) + ")" if why else ""
        )


@dataclass(frozen=True)
class MultiSolutionReport:
    I_r: tuple[float, float]
    pairs: list[PairReport]

    @property
    def solutions(self) -> list[StationarySolution]:
        return [p.solution for p in self.pairs if p.solution is not None]

    @property
    def failures(self) -> list[str]:
        return [p.describe() for p in self.pairs if not p.satisfied]


def multi_solution_search(
    problem: ProblemSpec,
    thresholds: Sequence[float],
    tol: float = 1e-10,
    damping: float = 0.5,
    max_iter: int = 2000,
    samples: int = 1000,
) -> MultiSolutionReport:
    """Seed one Picard solve per threshold pair ``(m_i, m_{i+1})``, ``i = 0, 2, ...``,
    whose interval conditions hold, and check ``m_i <= l_r(u) <= m_{i+1}``.
    """
    t = np.asarray(thresholds, dtype=float)
    if t.size < 2 or t[0] != 0.0:
        raise ValueError("thresholds must start at m_0 = 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    if (t.size - 1) % 2 != 1:
        raise ValueError(f"need an odd number of intervals n_1, got {t.size - 1}")
    a = problem.coeff
    phi = solve_laplace(problem.f)
    lr_phi = eval_lr(phi, problem.kernel, problem.r).values
    I_r = (float(lr_phi.min()), float(lr_phi.max()))
    slack = 1e-12 * max(1.0, abs(I_r[1]))
    pairs = []
    for i in range(0, t.size - 1, 2):
        lo, hi = t[i], t[i + 1]
        a_lo, a_hi = float(a(lo)), float(a(hi))
        target = (lo * a_lo, hi * a_hi)
        inclusion = target[0] - slack <= I_r[0] and I_r[1] <= target[1] + slack
        sample = a(np.linspace(lo, hi, samples))
        atol = 1e-12 * a.M
        extremum = a_lo >= sample.max() - atol and a_hi <= sample.min() + atol
        if not (inclusion and extremum):
            pairs.append(PairReport(i, lo, hi, target, inclusion, extremum))
            continue
        seed = solve_linear_radial(Field.constant(problem.mesh, a_lo), problem.f)
        sol = picard_stationary(problem, seed, damping=damping, tol=tol, max_iter=max_iter)
        lr = sol.lr_field.values
        within = bool(np.all(lr >= lo - 1e-9 * max(1.0, hi)) and np.all(lr <= hi + 1e-9 * max(1.0, hi)))
        pairs.append(PairReport(i, lo, hi, target, True, True, sol, within))
    return MultiSolutionReport(I_r, pairs)
