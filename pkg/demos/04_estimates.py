"""Closed-form constants: Poincare, Moser iteration and the absorbing ball.

The Poincare constant of the unit ball is the first Dirichlet eigenvalue,
``pi^2`` in 3-d. The Moser exponents contract geometrically with ratio
``theta``; their partial sums give the iteration's bound. The absorbing radius
bounds ``|u(t)|_2^2`` for ``t >= t0`` from any start of size ``rho0``.
"""
import math
from fractions import Fraction

from nonlocal_diffusion import absorbing_radius, build_radial_mesh, moser_bounds, poincare_constants
from nonlocal_diffusion import coefficients as co

from _common import problem

lam = poincare_constants(build_radial_mesh(3, 2.0, 256)).lambda_
print(f"lambda_1(unit ball, n=3) = {lam:.6f}, pi^2 = {math.pi ** 2:.6f}")

rep = moser_bounds(3, Fraction(2), Fraction(1), 10, 1.0, 1.0, 1.0)
print(f"theta = {rep.theta}, first exponents {[str(s) for s in rep.sigma_values[:4]]}")
print(f"partial sums reach {float(rep.lambda1_partial[-1]):.6f} of the limit {float(rep.lambda1_limit):.6f}")

for law in (co.constant(1.0), co.logistic(0.8, 1.2, 0.3, 0.5)):
    ab = absorbing_radius(problem(coeff=law), rho0=1.0, t0=1.0)
    print(f"{law.name:>9} law: a1 = {ab.a1:.4f}, absorbing radius {ab.radius:.4f}")
