"""Diffusion laws ``a(xi)`` with their bounds, Lipschitz constants and derivatives.

Builders cover the descriptors accepted by scenario configs: constant,
polynomial (clipped to ``[m, M]``), piecewise-linear tables, logistic decay,
clipped reciprocal, and the multi-threshold construction that produces
several stationary solutions (:func:`staircase_coefficient`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoefficientSpec:
    a: ArrayFn
    m: float
    M: float
    lipschitz: float
    a_prime: ArrayFn
    monotone_nonincreasing: bool
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, xi):
        return self.a(np.asarray(xi, dtype=float))

    def derivative(self, xi):
        return self.a_prime(np.asarray(xi, dtype=float))

    def sup_derivative(self, lo: float, hi: float, samples: int = 10_000) -> float:
        """``|a'|_{inf,[lo,hi]}`` estimated on a uniform sample."""
        xi = np.linspace(lo, hi, samples)
        return float(np.max(np.abs(self.derivative(xi))))

    def check(self, lo: float, hi: float, samples: int = 1000, rtol: float = 1e-9) -> None:
        """Raise ``ValueError`` if ``m <= a <= M`` or the Lipschitz bound fails on a sample."""
        if not 0 < self.m <= self.M:
            raise ValueError(f"need 0 < m <= M, got m={self.m}, M={self.M}")
        xi = np.linspace(lo, hi, samples)
        vals = self(xi)
        slack = rtol * self.M
        if np.any(vals < self.m - slack) or np.any(vals > self.M + slack):
            bad = xi[np.argmax((vals < self.m - slack) | (vals > self.M + slack))]
            raise ValueError(f"a({bad}) outside [m, M] = [{self.m}, {self.M}]")
        slopes = np.abs(np.diff(vals)) / np.diff(xi)
        if np.any(slopes > self.lipschitz * (1 + rtol) + slack):
            raise ValueError(f"observed slope {slopes.max()} exceeds Lipschitz constant {self.lipschitz}")


def constant(c: float) -> CoefficientSpec:
    c = float(c)
    if c <= 0:
        raise ValueError("constant coefficient must be positive")
    return CoefficientSpec(
        a=lambda xi: np.full_like(xi, c, dtype=float),
        m=c,
        M=c,
        lipschitz=0.0,
        a_prime=lambda xi: np.zeros_like(xi, dtype=float),
        monotone_nonincreasing=True,
        name="constant",
        params={"value": c},
    )


def piecewise_linear(xs: Sequence[float], ys: Sequence[float], name: str = "piecewise-linear") -> CoefficientSpec:
    """Linear interpolation through ``(xs, ys)``, constant outside ``[xs[0], xs[-1]]``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("piecewise-linear table needs matching 1-d xs, ys with >= 2 entries")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table abscissae must be strictly increasing")
    if np.any(ys <= 0):
        raise ValueError("table values must be positive")
    slopes = np.diff(ys) / np.diff(xs)

    def a_prime(xi):
        k = np.searchsorted(xs, xi, side="right") - 1
        inside = (k >= 0) & (k < slopes.size)
        return np.where(inside, slopes[np.clip(k, 0, slopes.size - 1)], 0.0)

    return CoefficientSpec(
        a=lambda xi: np.interp(xi, xs, ys),
        m=float(ys.min()),
        M=float(ys.max()),
        lipschitz=float(np.abs(slopes).max()),
        a_prime=a_prime,
        monotone_nonincreasing=bool(np.all(slopes <= 0)),
        name=name,
        params={"xs": xs.tolist(), "ys": ys.tolist()},
    )


def polynomial(coeffs: Sequence[float], m: float, M: float, lo: float, hi: float) -> CoefficientSpec:
    """``clip(sum_k c_k xi^k, m, M)``; Lipschitz constant and monotonicity sampled on ``[lo, hi]``."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    dp = p.deriv()
    m, M = float(m), float(M)

    def a(xi):
        return np.clip(p(xi), m, M)

    def a_prime(xi):
        v = p(xi)
        return np.where((v > m) & (v < M), dp(xi), 0.0)

    xi = np.linspace(lo, hi, 10_001)
    return CoefficientSpec(
        a=a,
        m=m,
        M=M,
        lipschitz=float(np.max(np.abs(a_prime(xi)))) * (1 + 1e-9),
        a_prime=a_prime,
        monotone_nonincreasing=bool(np.all(np.diff(a(xi)) <= 0)),
        name="polynomial",
        params={"coeffs": list(map(float, coeffs)), "m": m, "M": M, "lo": lo, "hi": hi},
    )


def logistic(m: float, M: float, center: float, width: float) -> CoefficientSpec:
    """Smooth nonincreasing step from ``M`` (xi << center) to ``m`` (xi >> center)."""
    m, M, center, width = map(float, (m, M, center, width))
    if not 0 < m <= M or width <= 0:
        raise ValueError("logistic coefficient needs 0 < m <= M and width > 0")

    def a(xi):
        return m + (M - m) * 0.5 * (1.0 - np.tanh((xi - center) / (2 * width)))

    def a_prime(xi):
        return -(M - m) / (4 * width) * (1.0 - np.tanh((xi - center) / (2 * width)) ** 2)

    return CoefficientSpec(
        a=a,
        m=m,
        M=M,
        lipschitz=(M - m) / (4 * width),
        a_prime=a_prime,
        monotone_nonincreasing=True,
        name="logistic",
        params={"m": m, "M": M, "center": center, "width": width},
    )


def clipped_reciprocal(m: float, M: float) -> CoefficientSpec:
    """``a(xi) = clip(1/(1+xi), m, M)`` for ``xi > -1``; ``M`` below that."""
    m, M = float(m), float(M)
    if not 0 < m <= M:
        raise ValueError("need 0 < m <= M")

    def raw(xi):
        with np.errstate(divide="ignore"):
            return np.where(xi > -1, 1.0 / (1.0 + np.maximum(xi, -1 + 1e-300)), np.inf)

    def a(xi):
        return np.clip(raw(xi), m, M)

    def a_prime(xi):
        v = raw(xi)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where((v > m) & (v < M), -v**2, 0.0)

    # |a'| = a^2 on the unclipped part, so M^2 bounds it (and is attained as M -> 1/(1+xi))
    return CoefficientSpec(
        a=a,
        m=m,
        M=M,
        lipschitz=M**2,
        a_prime=a_prime,
        monotone_nonincreasing=True,
        name="clipped-reciprocal",
        params={"m": m, "M": M},
    )


def staircase_coefficient(a0: float, i_min: float, i_max: float, m2: float | None = None):
    """Nonincreasing coefficient with two decreasing pieces satisfying the
    threshold conditions for three thresholds ``m1 < m2 < m3``.

    ``[i_min, i_max]`` must contain the range of ``l_r(phi)``. Returns the
    coefficient and the thresholds ``[0, m1, m2, m3]``:

    * ``m1 = 2 i_max / a0`` with ``a(m1) = a0 / 2`` (decreasing on ``[0, m1]``);
    * ``a(m2) = i_min / m2``, ``m3 = 2 i_max / a(m2)``, ``a(m3) = a(m2) / 2``.

    ``m2`` defaults to ``2 m1``. Between ``m1`` and ``m2`` and beyond ``m3`` the
    law is unconstrained; it is interpolated linearly and held constant.
    """
    if not 0 < i_min <= i_max:
        raise ValueError("need 0 < i_min <= i_max")
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    m1 = 2.0 * i_max / a0
    m2 = 2.0 * m1 if m2 is None else float(m2)
    if m2 <= m1:
        raise ValueError("m2 must exceed m1")
    a_m2 = i_min / m2
    m3 = 2.0 * i_max / a_m2
    spec = piecewise_linear([0.0, m1, m2, m3], [a0, a0 / 2.0, a_m2, a_m2 / 2.0], name="staircase")
    params = dict(spec.params, a0=a0, i_min=i_min, i_max=i_max)
    spec = CoefficientSpec(**{**spec.__dict__, "params": params})
    return spec, [0.0, m1, m2, m3]
