"""How many stationary states, and how they move with the interaction radius.

At ``r = d`` the window covers the whole domain, so ``l_d(u)`` is a number
``mu`` and every solution is ``phi / a(mu)`` where ``mu a(mu) = l_d(phi)``.
A constant law gives exactly one root; a staircase law built from interval
conditions gives several. For smaller ``r`` the same staircase still carries
two solutions, found by seeded Picard iteration. Finally we trace a single
branch ``r -> u_r`` for a gentle law where the uniqueness condition holds.
"""
import math

import numpy as np

from nonlocal_diffusion import enumerate_rd_solutions, multi_solution_search, trace_branch, uniqueness_condition
from nonlocal_diffusion import coefficients as co

from _common import problem, staircase

roots = enumerate_rd_solutions(problem(N=1024, coeff=co.constant(2.0), r=2.0))
print(f"a = 2: root mu = {roots[0].mu:.10f}, expected 4 pi / 90 = {4 * math.pi / 90:.10f}")

p, _ = staircase(r=2.0)
print("staircase law at r = d: roots", [f"{root.mu:.5f}" for root in enumerate_rd_solutions(p)])

p, thresholds = staircase(r=1.5)
report = multi_solution_search(p, thresholds)
for sol in report.solutions:
    print(f"r = 1.5 solution: u(0) = {sol.u.values[0]:.6f}, {sol.iterations} Picard iterations")

gentle = problem(coeff=co.logistic(0.8, 1.2, 0.3, 0.5))
mu_d = enumerate_rd_solutions(gentle)[0].mu
uq = uniqueness_condition(gentle, mu_d)
print(f"gentle law: uniqueness lhs {uq.lhs:.4f} < 1: {uq.holds}")
branch = trace_branch(gentle, np.linspace(0, 2.0, 9))
for r, sol in branch.entries:
    print(f"  r = {r:4.2f}: u_r(0) = {sol.u.values[0]:.6f}")
print("monotonicity violations:", branch.monotonicity_violations)
