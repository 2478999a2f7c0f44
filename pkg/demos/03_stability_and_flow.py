"""Stability of stationary states and what the evolution actually does.

The quadratic form ``G`` measures whether a stationary state resists small
perturbations. Along a branch with a gentle law its minimum stays positive.
The time-dependent problem is then started near each of the two staircase
solutions; every run settles back onto the solution it started next to.
"""
from nonlocal_diffusion import integrate, multi_solution_search, picard_stationary, sandwich_bounds, stability_margin, steady_state_detect
from nonlocal_diffusion import coefficients as co

from _common import problem, staircase

gentle = problem(coeff=co.logistic(0.8, 1.2, 0.3, 0.5))
for r in (0.0, 1.0, 2.0):
    q = gentle.with_r(r)
    rep = stability_margin(picard_stationary(q), q)
    print(f"r = {r:.1f}: min Rayleigh quotient {rep.min_rayleigh:.6f} (stable: {rep.stable})")

p, thresholds = staircase(r=1.5, N=64)
candidates = multi_solution_search(p, thresholds).solutions
for k, sol in enumerate(candidates):
    for factor in (0.8, 1.2):
        series = integrate(p, 60.0, 0.05, monitors=("steady",), u0=sol.u * factor, candidates=candidates)
        match = steady_state_detect(series, candidates, 1e-9)
        print(f"start {factor} x solution {k}: settles on solution {match.index} at distance {match.distance:.2e}")

steep = problem(coeff=co.logistic(0.5, 1.5, 0.15, 0.05))
lo, hi = sandwich_bounds(steep)
series = integrate(steep, 20.0, 0.01, monitors=("comparison", "energy"), u0=(lo + hi) * 0.5)
print(f"steep law, {len(series.times) - 1} steps: comparison violations {len(series.violations('comparison'))}, "
      f"energy violations {len(series.violations('energy'))}")
