"""Nodal radial fields."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import RadialMesh


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of a radial function ``u(x) = ũ(|x|)`` on ``mesh``."""

    mesh: RadialMesh
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.mesh.size,):
            raise ValueError(f"field has {values.shape} values, mesh has {self.mesh.size} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, mesh: RadialMesh, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(mesh, np.broadcast_to(fn(mesh.nodes), mesh.nodes.shape))

    @classmethod
    def constant(cls, mesh: RadialMesh, value: float) -> "Field":
        return cls(mesh, np.full(mesh.size, float(value)))

    @classmethod
    def zeros(cls, mesh: RadialMesh) -> "Field":
        return cls.constant(mesh, 0.0)

    def with_values(self, values) -> "Field":
        return Field(self.mesh, values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.mesh.size

    def __add__(self, other):
        check_same_mesh(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        check_same_mesh(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: float):
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return self.with_values(self.values / float(scalar))


def check_same_mesh(*fields: Field) -> RadialMesh:
    mesh = fields[0].mesh
    for f in fields[1:]:
        if f.mesh != mesh:
            raise ValueError(f"mesh mismatch: {f.mesh} vs {mesh}")
    return mesh


def l2_norm(u: Field) -> float:
    """Discrete L2(Omega) norm with finite-volume cell measures."""
    return float(np.sqrt(np.dot(u.mesh.cell_volumes, u.values**2)))


def gradient(u: Field) -> np.ndarray:
    """Radial derivative at the cell faces."""
    return np.diff(u.values) / u.mesh.cell_width


def grad_norm(u: Field) -> float:
    """``|∇u|_2`` using face derivatives weighted by face measure."""
    mesh = u.mesh
    return float(np.sqrt(np.dot(mesh.interface_areas * mesh.cell_width, gradient(u) ** 2)))


def distance(u: Field, v: Field) -> float:
    return l2_norm(u - v)
