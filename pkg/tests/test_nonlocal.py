import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_diffusion import (
    Field,
    KernelSpec,
    ball_domain_measure,
    build_radial_mesh,
    eval_lr,
    lr_bound_report,
    solve_laplace,
)
from conftest import random_field


@pytest.fixture(params=[1, 2, 3])
def mesh(request):
    return build_radial_mesh(request.param, 2.0, 64)


def test_zero_kernel_gives_zero(mesh, rng):
    u = random_field(mesh, rng)
    out = eval_lr(u, KernelSpec.constant(mesh, 0.0), 0.7)
    assert np.all(out.values == 0)


@pytest.mark.parametrize("r", [0.3, 1.0, 1.7])
def test_unit_field_gives_ball_measure(mesh, r):
    out = eval_lr(Field.constant(mesh, 1.0), KernelSpec.constant(mesh), r)
    expected = [ball_domain_measure(rho, r, mesh) for rho in mesh.nodes]
    np.testing.assert_allclose(out.values, expected, rtol=1e-13)


def test_full_window_of_phi_unit_ball():
    mesh = build_radial_mesh(3, 2.0, 256)
    phi = solve_laplace(Field.constant(mesh, 1.0))
    out = eval_lr(phi, KernelSpec.constant(mesh), 2.0).values
    assert np.ptp(out) <= 1e-10 * abs(out.mean())
    assert out.mean() == pytest.approx(4 * math.pi / 45, rel=1e-4)


def test_r_zero_is_identically_zero(mesh, rng):
    assert np.all(eval_lr(random_field(mesh, rng), KernelSpec.constant(mesh), 0.0).values == 0)


def test_full_window_is_constant(mesh, rng):
    u = random_field(mesh, rng)
    g = random_field(mesh, rng, dirichlet=False)
    out = eval_lr(u, KernelSpec(g), mesh.d).values
    assert np.ptp(out) <= 1e-10 * max(1.0, np.max(np.abs(out)))


def test_linearity(mesh, rng):
    u, v = random_field(mesh, rng), random_field(mesh, rng)
    k = KernelSpec(random_field(mesh, rng, dirichlet=False))
    lhs = eval_lr(2.5 * u - 0.75 * v, k, 0.9).values
    rhs = 2.5 * eval_lr(u, k, 0.9).values - 0.75 * eval_lr(v, k, 0.9).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


def test_monotone_in_r_for_nonnegative_data(mesh, rng):
    u = Field(mesh, np.abs(random_field(mesh, rng).values))
    k = KernelSpec(Field(mesh, np.abs(random_field(mesh, rng, dirichlet=False).values)))
    prev = np.zeros(mesh.size)
    for r in np.linspace(0, mesh.d, 21):
        cur = eval_lr(u, k, r).values
        assert np.all(cur >= prev - 1e-14)
        prev = cur


def test_radius_out_of_range(mesh):
    u = Field.constant(mesh, 1.0)
    for r in (-0.1, 2.5):
        with pytest.raises(ValueError):
            eval_lr(u, KernelSpec.constant(mesh), r)


def test_mesh_mismatch(mesh):
    other = build_radial_mesh(mesh.n, 2.0, 32)
    with pytest.raises(ValueError):
        eval_lr(Field.constant(other, 1.0), KernelSpec.constant(mesh), 0.5)


def test_kernel_norms(mesh, rng):
    k = KernelSpec(random_field(mesh, rng, dirichlet=False))
    assert k.l2_norm >= 0 and k.h1_norm**2 >= k.l2_norm**2 - 1e-12
    unit = KernelSpec.constant(mesh)
    # trapezoid of the constant is the exact domain measure up to O(h^2)
    assert unit.l2_norm**2 == pytest.approx(mesh.volume, rel=1e-3)
    assert unit.h1_norm == pytest.approx(unit.l2_norm)


class TestBoundReport:
    def test_zero_field(self, mesh):
        rep = lr_bound_report(Field.zeros(mesh), KernelSpec.constant(mesh), 1.0)
        assert rep.max_lr == 0 and rep.cauchy_schwarz_bound == 0 and rep.domain_scaled_bound == 0 and rep.holds

    def test_bump(self, mesh):
        bump = Field.from_function(mesh, lambda x: np.exp(-((x - 0.4) / 0.1) ** 2))
        rep = lr_bound_report(bump, KernelSpec(bump), 0.5)
        assert rep.ratio <= 1 + 1e-6 and rep.holds

    def test_random_fields(self, mesh, rng):
        passes = 0
        for _ in range(100):
            u = random_field(mesh, rng, modes=10)
            g = random_field(mesh, rng, modes=10, dirichlet=False)
            passes += lr_bound_report(u, KernelSpec(g), mesh.d / 2).holds
        assert passes == 100

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.0, 2.0), n=st.sampled_from([1, 2, 3]))
    def test_property_cauchy_schwarz(self, seed, r, n):
        mesh = build_radial_mesh(n, 2.0, 32)
        rng = np.random.default_rng(seed)
        u = Field(mesh, rng.normal(size=mesh.size))
        g = Field(mesh, rng.normal(size=mesh.size))
        assert lr_bound_report(u, KernelSpec(g), r).holds
