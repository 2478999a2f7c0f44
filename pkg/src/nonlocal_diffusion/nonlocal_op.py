"""The windowed integral ``l_r(u)(x) = ∫_{Omega ∩ B(x,r)} g(y) u(y) dy`` on radial fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fields import Field, check_same_mesh
from .geometry import RadialMesh, shell_weight


def trapezoid_l2(u: Field) -> float:
    """``(∫_0^{d/2} omega_n s^(n-1) u(s)^2 ds)^(1/2)`` by trapezoid."""
    return float(np.sqrt(np.dot(u.mesh.radial_weights, u.values**2)))


@dataclass(frozen=True)
class KernelSpec:
    g: Field
    l2_norm: float = field(init=False)
    h1_norm: float = field(init=False)

    def __post_init__(self):
        mesh = self.g.mesh
        l2 = trapezoid_l2(self.g)
        dg = np.diff(self.g.values) / mesh.cell_width
        grad_sq = float(np.dot(mesh.interface_areas * mesh.cell_width, dg**2))
        object.__setattr__(self, "l2_norm", l2)
        object.__setattr__(self, "h1_norm", float(np.sqrt(l2**2 + grad_sq)))

    @property
    def mesh(self) -> RadialMesh:
        return self.g.mesh

    @classmethod
    def constant(cls, mesh: RadialMesh, value: float = 1.0) -> "KernelSpec":
        return cls(Field.constant(mesh, value))


@lru_cache(maxsize=64)
def shell_matrix(mesh: RadialMesh, r: float) -> np.ndarray:
    """``W[i, j] = w_j * shell_weight(rho_i, s_j, r)`` so that ``l_r(u) = W @ (g u)``.

    Cached per ``(mesh, r)``; entries are a pure function of the key, so a race
    on first use only computes the same array twice.
    """
    if r == 0:
        W = np.zeros((mesh.size, mesh.size))
    else:
        rho = mesh.nodes[:, None]
        s = mesh.nodes[None, :]
        W = shell_weight(rho, s, r, mesh.n) * mesh.trapezoid_weights[None, :]
    W.flags.writeable = False
    return W


def _check_radius(r: float, mesh: RadialMesh) -> float:
    r = float(r)
    if r < 0 or r > mesh.d * (1 + 1e-12):
        raise ValueError(f"interaction radius r={r} outside [0, d={mesh.d}]")
    return min(r, mesh.d)


def lr_matrix(kernel: KernelSpec, r: float) -> np.ndarray:
    """Dense matrix ``L`` with ``l_r(u) = L @ u`` at the nodes."""
    r = _check_radius(r, kernel.mesh)
    return shell_matrix(kernel.mesh, r) * kernel.g.values[None, :]


def eval_lr(u: Field, kernel: KernelSpec, r: float) -> Field:
    mesh = check_same_mesh(u, kernel.g)
    r = _check_radius(r, mesh)
    return Field(mesh, shell_matrix(mesh, r) @ (kernel.g.values * u.values))


@dataclass(frozen=True)
class LrBoundReport:
    max_lr: float
    cauchy_schwarz_bound: float
    domain_scaled_bound: float
    ratio: float
    holds: bool


def lr_bound_report(u: Field, kernel: KernelSpec, r: float, rtol: float = 1e-12) -> LrBoundReport:
    """Compare ``max |l_r(u)|`` with ``|g|_2 |u|_2`` and ``|Omega|^(1/(n∨3)) |g|_2 |u|_2``."""
    lr = eval_lr(u, kernel, r)
    mesh = u.mesh
    max_lr = float(np.max(np.abs(lr.values)))
    cs = kernel.l2_norm * trapezoid_l2(u)
    scaled = mesh.volume ** (1.0 / max(mesh.n, 3)) * cs
    ratio = max_lr / cs if cs > 0 else 0.0
    holds = max_lr <= cs * (1 + rtol) + 1e-300
    return LrBoundReport(max_lr, cs, scaled, ratio, bool(holds))
