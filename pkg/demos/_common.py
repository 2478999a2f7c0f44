"""Shared problem construction for the demo scripts."""
from nonlocal_diffusion import Field, KernelSpec, ProblemSpec, build_radial_mesh, eval_lr, solve_laplace
from nonlocal_diffusion import coefficients as co


def problem(n=3, d=2.0, N=128, coeff=None, r=1.0, f=1.0, g=1.0):
    mesh = build_radial_mesh(n, d, N)
    coeff = co.constant(1.0) if coeff is None else coeff
    return ProblemSpec(mesh, Field.constant(mesh, f), KernelSpec.constant(mesh, g), coeff, r)


def staircase(r=1.5, N=128, widen=0.2):
    """Problem whose diffusion law admits several stationary solutions at radius ``r``."""
    p = problem(N=N, r=r)
    lr = eval_lr(solve_laplace(p.f), p.kernel, r).values
    a, thresholds = co.staircase_coefficient(1.0, (1 - widen) * lr.min(), (1 + widen) * lr.max())
    return ProblemSpec(p.mesh, p.f, p.kernel, a, r), thresholds
