"""Radial meshes on the ball of radius d/2 and the geometric weights used to
reduce integrals over ``Omega ∩ B(x, r)`` to one-dimensional quadratures.

Two quadratures live on a :class:`RadialMesh`:

* composite trapezoid weights on the nodes (nonlocal integrals, kernel norms);
* finite-volume cell volumes and interface areas (elliptic / parabolic
  operators, energy norms).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SUPPORTED_DIMENSIONS = (1, 2, 3)


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere in R^n (counting measure for n=1)."""
    if n == 1:
        return 2.0
    if n == 2:
        return 2.0 * np.pi
    if n == 3:
        return 4.0 * np.pi
    raise ValueError(f"unsupported dimension n={n}; expected one of {SUPPORTED_DIMENSIONS}")


@dataclass(frozen=True)
class RadialMesh:
    """Uniform nodal grid ``0 = rho_0 < ... < rho_N = d/2`` in dimension ``n``."""

    n: int
    d: float
    N: int

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"unsupported dimension n={self.n}; expected one of {SUPPORTED_DIMENSIONS}")
        if not self.d > 0:
            raise ValueError(f"diameter must be positive, got d={self.d}")
        if int(self.N) != self.N or self.N < 4:
            raise ValueError(f"cell count must be an integer >= 4, got N={self.N}")

    @property
    def radius(self) -> float:
        return 0.5 * self.d

    @property
    def cell_width(self) -> float:
        return self.radius / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.arange(self.N + 1) * self.cell_width
        nodes[-1] = self.radius
        nodes.flags.writeable = False
        return nodes

    @property
    def size(self) -> int:
        return self.N + 1

    @property
    def omega(self) -> float:
        return sphere_measure(self.n)

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.N + 1, self.cell_width)
        w[0] = w[-1] = 0.5 * self.cell_width
        w.flags.writeable = False
        return w

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """Trapezoid weights times the radial density ``omega_n rho^(n-1)``."""
        w = self.trapezoid_weights * self.omega * self.nodes ** (self.n - 1)
        w.flags.writeable = False
        return w

    @cached_property
    def interfaces(self) -> np.ndarray:
        """Cell faces ``rho_{i+1/2}``, i = 0..N-1."""
        f = (np.arange(self.N) + 0.5) * self.cell_width
        f.flags.writeable = False
        return f

    @cached_property
    def interface_areas(self) -> np.ndarray:
        a = self.omega * self.interfaces ** (self.n - 1)
        a.flags.writeable = False
        return a

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """Exact measure of the shell ``[rho_{i-1/2}, rho_{i+1/2}] ∩ [0, d/2]``."""
        edges = np.concatenate(([0.0], self.interfaces, [self.radius]))
        v = self.omega * (edges[1:] ** self.n - edges[:-1] ** self.n) / self.n
        v.flags.writeable = False
        return v

    @property
    def volume(self) -> float:
        """Exact measure of the domain ``|Omega|``."""
        return self.omega * self.radius ** self.n / self.n


def build_radial_mesh(n: int, d: float, N: int) -> RadialMesh:
    return RadialMesh(n=int(n), d=float(d), N=int(N))


def shell_weight(rho, s, r, n: int):
    """Measure of the sphere ``{|y| = s}`` lying inside the closed ball ``B(x, r)``, ``|x| = rho``.

    Broadcasts over array arguments. For ``n = 1`` the sphere is the point pair
    ``{-s, +s}`` with counting measure.
    """
    rho, s, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, s, r)))
    if np.any(rho < 0) or np.any(s < 0) or np.any(r < 0):
        raise ValueError("shell_weight arguments must be nonnegative")
    if n == 1:
        out = (np.abs(rho - s) <= r).astype(float) + (rho + s <= r).astype(float)
        return out[()] if out.ndim == 0 else out

    full = sphere_measure(n) * s ** (n - 1)
    inside = rho + s <= r
    # rho * s underflowing to zero is as degenerate as an exact zero
    degenerate = rho * s == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if n == 2:
            cos_angle = np.clip((rho**2 + s**2 - r**2) / (2.0 * rho * s), -1.0, 1.0)
            partial = 2.0 * s * np.arccos(cos_angle)
            partial = np.where(np.abs(rho - s) >= r, 0.0, partial)
        elif n == 3:
            lens = (np.pi * s / rho) * (r**2 - (rho - s) ** 2)
            partial = np.where(np.abs(rho - s) >= r, 0.0, lens)
        else:
            raise ValueError(f"unsupported dimension n={n}; expected one of {SUPPORTED_DIMENSIONS}")
    out = np.where(inside, full, np.where(degenerate, 0.0, partial))
    out = np.clip(out, 0.0, full)
    return out[()] if out.ndim == 0 else out


def ball_domain_measure(rho: float, r: float, mesh: RadialMesh) -> float:
    """``|B(x, r) ∩ Omega|`` for ``|x| = rho``, by trapezoid over shell radii."""
    if not 0.0 <= rho <= mesh.radius:
        raise ValueError(f"rho={rho} outside [0, {mesh.radius}]")
    if r < 0:
        raise ValueError(f"interaction radius must be nonnegative, got r={r}")
    if r == 0:
        return 0.0
    w = shell_weight(rho, mesh.nodes, r, mesh.n)
    return float(np.dot(mesh.trapezoid_weights, w))
