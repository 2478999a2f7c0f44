"""Time integration of ``u_t - div(a(l_r(u)) grad u) = f`` with implicit
diffusion and a lagged nonlocal coefficient, plus trajectory monitors.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .estimates import dual_norm, stiffness_banded
from .fields import Field, check_same_mesh, distance, grad_norm, l2_norm
from .stationary import (
    ProblemSpec,
    StationarySolution,
    coefficient_field,
    enumerate_rd_solutions,
    solve_laplace,
)

log = logging.getLogger(__name__)

MONITORS = frozenset({"energy", "comparison", "steady"})


@dataclass
class TimeSeries:
    times: list[float]
    states: list[Field]
    energy_trace: list[dict] = field(default_factory=list)
    monitor_log: list[dict] = field(default_factory=list)
    steady_distances: list[list[float]] = field(default_factory=list)
    dt: float = float("nan")

    @property
    def final(self) -> Field:
        return self.states[-1]

    def violations(self, monitor: str) -> list[dict]:
        return [e for e in self.monitor_log if e["monitor"] == monitor]


def step_imex(state: Field, dt: float, problem: ProblemSpec) -> Field:
    """One step of ``(u - state)/dt - div(a(l_r(state)) grad u) = f``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    mesh = check_same_mesh(state, problem.f)
    A, _ = coefficient_field(problem, state)
    assert np.all(A.values >= problem.coeff.m * (1 - 1e-12)), "coefficient below m"
    ab = stiffness_banded(A)
    V = mesh.cell_volumes[:-1]
    ab[1] += V / dt
    rhs = V * (state.values[:-1] / dt + problem.f.values[:-1])
    u = np.zeros(mesh.size)
    u[:-1] = solve_banded((1, 1), ab, rhs)
    return Field(mesh, u)


def sandwich_bounds(problem: ProblemSpec) -> tuple[Field, Field]:
    """``(u_0, u_d)``: the ``r = 0`` solution ``phi/a(0)`` and the smallest ``r = d`` solution."""
    phi = solve_laplace(problem.f)
    lower = phi / float(problem.coeff(0.0))
    roots = enumerate_rd_solutions(problem)
    if not roots:
        raise ValueError("no r = d stationary solution found for the comparison monitor")
    return lower, roots[0].u_d


def integrate(
    problem: ProblemSpec,
    T_end: float,
    dt: float,
    monitors: Iterable[str] = ("energy",),
    u0: Field | None = None,
    bounds: tuple[Field, Field] | None = None,
    candidates: Sequence[StationarySolution | Field] = (),
    energy_tol: float = 1e-8,
    comparison_rtol: float = 1e-6,
) -> TimeSeries:
    """Repeated :func:`step_imex` from ``u0`` (default ``problem.u0``) up to ``T_end``.

    Monitor violations are appended to ``monitor_log``; integration continues.
    The comparison monitor needs a nonincreasing coefficient, ``f, g >= 0`` and
    ``u_0 <= u0 <= u_d``; ``bounds`` overrides the default ``(u_0, u_d)``.
    """
    monitors = set(monitors)
    if monitors - MONITORS:
        raise ValueError(f"unknown monitors {sorted(monitors - MONITORS)}")
    if T_end <= 0 or dt <= 0:
        raise ValueError("T_end and dt must be positive")
    u = u0 if u0 is not None else problem.u0
    if u is None:
        raise ValueError("no initial state given")
    check_same_mesh(u, problem.f)
    steps = int(round(T_end / dt))
    series = TimeSeries(times=[0.0], states=[u], dt=dt)

    m = problem.coeff.m
    f_star2 = dual_norm(problem.f) ** 2
    e0 = 0.5 * l2_norm(u) ** 2
    dissipated = 0.0

    if "comparison" in monitors:
        if not problem.coeff.monotone_nonincreasing:
            raise ValueError("comparison monitor requires a nonincreasing coefficient")
        if not problem.nonnegative_data():
            raise ValueError("comparison monitor requires f, g >= 0")
        lower, upper = bounds if bounds is not None else sandwich_bounds(problem)
        ctol = comparison_rtol * float(np.max(upper.values))
        if np.any(u.values < lower.values - ctol) or np.any(u.values > upper.values + ctol):
            raise ValueError("initial state is not between u_0 and u_d")
    cand = [c.u if isinstance(c, StationarySolution) else c for c in candidates]
    if "steady" in monitors:
        series.steady_distances.append([distance(u, c) for c in cand])

    for k in range(1, steps + 1):
        u = step_imex(u, dt, problem)
        series.times.append(k * dt)
        series.states.append(u)
        if "energy" in monitors:
            l2sq = l2_norm(u) ** 2
            vsq = grad_norm(u) ** 2
            dissipated += dt * vsq
            lhs = 0.5 * l2sq + 0.5 * m * dissipated
            rhs = e0 + k * dt * f_star2 / (2 * m)
            series.energy_trace.append({"step": k, "l2_sq": l2sq, "v_sq": vsq, "dual_sq": f_star2,
                                        "lhs": lhs, "rhs": rhs})
            if lhs > rhs + energy_tol:
                series.monitor_log.append({"step": k, "monitor": "energy", "magnitude": lhs - rhs})
        if "comparison" in monitors:
            below = float(np.max(lower.values - u.values))
            above = float(np.max(u.values - upper.values))
            worst = max(below, above)
            if worst > ctol:
                series.monitor_log.append({"step": k, "monitor": "comparison", "magnitude": worst})
        if "steady" in monitors:
            series.steady_distances.append([distance(u, c) for c in cand])
    if series.monitor_log:
        log.info("%d monitor violations over %d steps", len(series.monitor_log), steps)
    return series


@dataclass(frozen=True)
class SteadyMatch:
    index: int
    distance: float
    increment: float


def steady_state_detect(series: TimeSeries, candidates: Sequence[StationarySolution | Field],
                        tol: float) -> SteadyMatch | None:
    """Nearest candidate to the final state, or ``None`` while the flow is still moving."""
    if not series.states:
        raise ValueError("empty series")
    if len(series.states) < 2:
        return None
    increment = distance(series.states[-1], series.states[-2])
    if increment > tol or not candidates:
        return None
    fields = [c.u if isinstance(c, StationarySolution) else c for c in candidates]
    d = [distance(series.final, c) for c in fields]
    k = int(np.argmin(d))
    return SteadyMatch(k, d[k], increment)
