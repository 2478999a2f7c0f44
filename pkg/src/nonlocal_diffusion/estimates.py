"""Closed-form constants and bound sequences: Moser exponents, absorbing-set
radius, the Gronwall factor for uniqueness, and the Poincaré constants of
the discrete Dirichlet Laplacian.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import solve_banded

from .fields import Field, grad_norm, l2_norm
from .geometry import RadialMesh
from .nonlocal_op import KernelSpec, eval_lr

# |grad l_r(u)|_2 <= K ||g||_{H^1} |grad u|_2. Fitted once on 1200 randomized
# trigonometric fields (n = 1, 2, 3; N = 64, 128; r uniform in [0, d]): largest
# observed ratio 0.388, rounded up to 1.0. Fixed thereafter.
DEFAULT_K = 1.0


# ---------------------------------------------------------------- Poincaré


@dataclass(frozen=True)
class ConstantsTable:
    C1: float
    lambda_: float
    omega_n: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {"C1": self.C1, "lambda": self.lambda_, "omega_n": self.omega_n,
                "iterations": self.iterations, "converged": self.converged}


def stiffness_banded(A: Field) -> np.ndarray:
    """Finite-volume ``-div(A grad .)`` on nodes ``0..N-1`` (``u_N = 0``) in
    :func:`scipy.linalg.solve_banded` layout ``(1, 1)``; rows are scaled by cell volume.
    """
    mesh = A.mesh
    coef = mesh.interface_areas * 0.5 * (A.values[:-1] + A.values[1:]) / mesh.cell_width
    N = mesh.N
    ab = np.zeros((3, N))
    ab[1] = coef
    ab[1, 1:] += coef[:-1]
    ab[0, 1:] = -coef[:-1]
    ab[2, :-1] = -coef[:-1]
    return ab


def banded_matvec(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = ab[1] * x
    y[:-1] += ab[0, 1:] * x[1:]
    y[1:] += ab[2, :-1] * x[:-1]
    return y


def principal_eigenpair(mesh: RadialMesh, tol: float = 1e-12, max_iter: int = 500):
    """Smallest eigenpair of ``K v = λ V v`` by inverse power iteration.

    Returns ``(λ, v, iterations, converged)`` with ``v`` a nodal array
    (zero at the Dirichlet node), positive and normalised in discrete L2.
    """
    K = stiffness_banded(Field.constant(mesh, 1.0))
    V = mesh.cell_volumes[:-1]
    v = np.cos(0.5 * np.pi * mesh.nodes[:-1] / mesh.radius) + 0.1
    lam = np.inf
    for it in range(1, max_iter + 1):
        v = solve_banded((1, 1), K, V * v)
        v /= math.sqrt(np.dot(V, v * v))
        new = float(np.dot(v, banded_matvec(K, v)))
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    else:
        return lam, np.append(v, 0.0), max_iter, False
    return lam, np.append(v * np.sign(v[0]), 0.0), it, True


def poincare_constants(mesh: RadialMesh) -> ConstantsTable:
    lam, _, it, ok = principal_eigenpair(mesh)
    if not ok:
        raise RuntimeError(f"inverse power iteration did not converge on {mesh}")
    return ConstantsTable(C1=1.0 / lam, lambda_=lam, omega_n=mesh.omega, iterations=it, converged=ok)


def dual_norm(f: Field) -> float:
    """``|f|_*`` in ``H^{-1}``: ``|grad phi_f|_2`` with ``-Δphi_f = f``."""
    from .stationary import solve_laplace

    return grad_norm(solve_laplace(f))


# ---------------------------------------------------------------- Moser


def moser_sigma(n, p, r):
    return p * (n + 2) / (2 * (r * (2 * p - p * n + n) + n * p))


def moser_theta(n, p):
    c2 = 2 * p - p * n + n
    c3 = n * p
    return 1 - c2 / (2 * c2 + c3)


def moser_beta(n, p, r):
    """Interpolation exponent in ``1/(αp) = β + (1-β)/2*`` with ``α = (2r-1)/r``."""
    return (2 * n * r - (n - 2) * (2 * r - 1) * p) / ((n + 2) * (2 * r - 1) * p)


def moser_rho(n, p, r):
    return (2 * n * r - (n - 2) * (2 * r - 1) * p) / (2 * r * (p * (n + 2) + n) - 2 * n * (2 * r - 1) * p)


def check_moser_hypotheses(n, p) -> None:
    if n < 3:
        raise ValueError(f"Moser bounds need n >= 3, got n={n}")
    if not 1 < p < n / (n - 2):
        raise ValueError(f"need 1 < p < n/(n-2) = {n / (n - 2):g}, got p={p}")


@dataclass(frozen=True)
class MoserReport:
    n: int
    p: float
    q: float
    h: float
    sigma_values: list
    theta: float
    lambda1: float
    lambda2: float
    lambda1_limit: float
    lambda2_limit: float
    lambda1_partial: list
    lambda2_partial: list
    bound_sequence: list

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigma"] = d.pop("sigma_values")
        return {k: (float(v) if not isinstance(v, (list, int)) else v) for k, v in d.items()}


def moser_bounds(n, p, h, k_max: int, C2: float, f_norm: float, U_h: float) -> MoserReport:
    """Exponents and the iterated bound ``U_{2r} <= [C2 |f|]^σ(r) r^σ(r) U_r``, ``r = 2^k h``.

    Exact when ``n, p, h`` are ``int``/``Fraction``. ``bound_sequence[k]`` bounds
    ``U_{2^(k+1) h}``.
    """
    check_moser_hypotheses(n, p)
    if h < 1:
        raise ValueError("starting exponent h must be >= 1")
    if C2 <= 0 or U_h < 1:
        raise ValueError("need C2 > 0 and U_h >= 1")
    theta = moser_theta(n, p)
    sigmas = [moser_sigma(n, p, 2**k * h) for k in range(k_max + 1)]
    l1, l2 = [], []
    s1 = s2 = 0
    for k, s in enumerate(sigmas):
        s1 += s
        s2 += k * s
        l1.append(s1)
        l2.append(s2)
    bounds = []
    U = float(U_h)
    base = float(C2) * float(f_norm)
    for k, s in enumerate(sigmas):
        rk = float(2**k * h)
        U = U * base ** float(s) * rk ** float(s)
        bounds.append(U)
    q = p / (p - 1)
    return MoserReport(
        n=n, p=p, q=q, h=h,
        sigma_values=sigmas,
        theta=theta,
        lambda1=s1,
        lambda2=s2,
        lambda1_limit=sigmas[0] / (1 - theta),
        lambda2_limit=moser_sigma(n, p, 2 * h) / (1 - theta) ** 2,
        lambda1_partial=l1,
        lambda2_partial=l2,
        bound_sequence=bounds,
    )


# ---------------------------------------------------------------- absorbing set


@dataclass(frozen=True)
class AbsorbingSetReport:
    a1: float
    a2: float
    a3: float
    t0: float
    rho0: float
    radius: float
    lambda_: float
    K: float
    m: float
    f_norm: float
    g_h1: float
    a_prime_sup: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


def absorbing_radius(problem, rho0: float, t0: float, K: float = DEFAULT_K,
                     constants: ConstantsTable | None = None) -> AbsorbingSetReport:
    """Radius ``(a3/t0 + a2) exp(a1)`` of the absorbing ball in ``H^1_0``.

    ``a3 = t0 λ |f|^2 / m^2 + rho0^2 / m``, ``a2 = t0 |f|^2 / m``,
    ``a1 = (K ||g||_{H^1})^2 |a'|_inf^2 a3 / m``; ``|a'|_inf`` is the
    coefficient's Lipschitz constant.
    """
    if rho0 <= 0 or t0 <= 0:
        raise ValueError("rho0 and t0 must be positive")
    constants = constants or poincare_constants(problem.mesh)
    lam = constants.lambda_
    m = problem.coeff.m
    f2 = l2_norm(problem.f) ** 2
    g_h1 = problem.kernel.h1_norm
    ap = problem.coeff.lipschitz
    a3 = t0 * lam * f2 / m**2 + rho0**2 / m
    a2 = t0 * f2 / m
    a1 = (K * g_h1) ** 2 * ap**2 * a3 / m
    # a1 grows with |a'|^2; report an unbounded radius rather than overflow
    radius = (a3 / t0 + a2) * math.exp(a1) if a1 < 700 else math.inf
    return AbsorbingSetReport(a1, a2, a3, t0, rho0, radius, lam, K, m, math.sqrt(f2), g_h1, ap)


def gradient_transfer_ratio(u: Field, kernel: KernelSpec, r: float) -> float:
    """``|grad l_r(u)|_2 / (||g||_{H^1} |grad u|_2)``."""
    gu = grad_norm(u)
    if gu == 0:
        return 0.0
    return grad_norm(eval_lr(u, kernel, r)) / (kernel.h1_norm * gu)


# ---------------------------------------------------------------- Gronwall


@dataclass(frozen=True)
class GronwallReport:
    times: np.ndarray
    p_hat: np.ndarray
    integral: float
    cumulative: np.ndarray
    gamma: float
    nonlocal_constant: float


def gronwall_factor(series, problem, nonlocal_constant: float = 1.0) -> GronwallReport:
    """``p(t) = (γ C_l |g|_2 ||u_1(t)||_V)^2 / m`` along a computed trajectory.

    ``C_l`` bounds ``max|l_r(w)| <= C_l |g|_2 |w|_2``; Cauchy–Schwarz gives
    ``C_l = 1`` (checked by :func:`lr_bound_report`). The integral is by
    trapezoid over ``series.times``.
    """
    gamma = problem.coeff.lipschitz
    m = problem.coeff.m
    gl2 = problem.kernel.l2_norm
    times = np.asarray(series.times, dtype=float)
    vnorm = np.array([grad_norm(s) for s in series.states])
    p_hat = (gamma * nonlocal_constant * gl2 * vnorm) ** 2 / m
    cumulative = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(times) * (p_hat[1:] + p_hat[:-1]))))
    return GronwallReport(times, p_hat, float(cumulative[-1]), cumulative, gamma, nonlocal_constant)
