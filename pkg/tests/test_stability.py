import numpy as np
import pytest
from scipy.linalg import eigh

from nonlocal_diffusion import picard_stationary, stability_margin, trace_branch
from nonlocal_diffusion import coefficients as co
from nonlocal_diffusion.stability import min_generalized_eigenvalue, stability_forms
from conftest import GENTLE, STEEP, make_problem


def solved(problem):
    sol = picard_stationary(problem, tol=1e-11)
    assert sol.converged
    return sol


def test_constant_coefficient_margin_is_m():
    p = make_problem(coeff=co.constant(0.7))
    rep = stability_margin(solved(p), p)
    assert rep.converged and rep.stable
    assert rep.min_rayleigh >= 0.7 - 1e-8
    assert rep.min_rayleigh == pytest.approx(0.7, rel=1e-9)


def test_zero_source_margin_is_a_at_zero():
    law = co.logistic(**STEEP)
    p = make_problem(coeff=law, f=0.0)
    sol = solved(p)
    assert np.all(sol.u.values == 0)
    rep = stability_margin(sol, p)
    assert rep.min_rayleigh == pytest.approx(float(law(0.0)), rel=1e-9)
    assert rep.min_rayleigh >= law.m


def test_branch_entries_stable_under_hypotheses():
    p = make_problem(coeff=co.logistic(**GENTLE))
    br = trace_branch(p, tol=1e-10)
    tol = 1e-8 * p.coeff.M
    for r, s in br.entries:
        rep = stability_margin(s, p.with_r(r))
        assert rep.converged and rep.stable and rep.min_rayleigh >= -tol
        # hypotheses of the sufficient condition hold, so the margin is strictly positive
        assert rep.min_rayleigh > 0
        assert rep.min_rayleigh >= rep.lower_bound_analytic - tol


@pytest.mark.parametrize("law", [co.logistic(**GENTLE), co.logistic(**STEEP), co.clipped_reciprocal(0.2, 1.0)],
                         ids=["gentle", "steep", "reciprocal"])
def test_minimizer_is_lower_envelope(law, rng):
    p = make_problem(coeff=law, N=48)
    sol = solved(p)
    B, G = stability_forms(sol, p)
    rep = stability_margin(sol, p)
    for _ in range(100):
        phi = rng.normal(size=B.shape[0])
        assert phi @ B @ phi >= rep.min_rayleigh * (phi @ G @ phi) - 1e-10 * abs(phi @ G @ phi)


def test_rayleigh_quotient_scale_invariant():
    p = make_problem(coeff=co.logistic(**STEEP), N=48)
    sol = solved(p)
    B, G = stability_forms(sol, p)
    x = stability_margin(sol, p).eigenvector[:-1]
    q = [(c * x) @ B @ (c * x) / ((c * x) @ G @ (c * x)) for c in (1e-3, 1.0, -7.0, 1e4)]
    np.testing.assert_allclose(q, q[0], rtol=1e-12)


@pytest.mark.parametrize("N", [8, 20, 40])
def test_generalized_eigenvalue_against_dense_solver(N, rng):
    X = rng.normal(size=(N, N))
    G = X @ X.T + N * np.eye(N)
    S = rng.normal(size=(N, N))
    B = 0.5 * (S + S.T)
    theta, vec, _, ok, (lo, hi) = min_generalized_eigenvalue(B, G)
    ref = eigh(B, G, eigvals_only=True)[0]
    assert ok and theta == pytest.approx(ref, rel=1e-9, abs=1e-12)
    assert lo <= ref <= hi + 1e-9


def test_forms_are_symmetric_and_gradient_form_positive():
    p = make_problem(coeff=co.clipped_reciprocal(0.2, 1.0), N=32)
    B, G = stability_forms(solved(p), p)
    np.testing.assert_array_equal(B, B.T)
    assert np.all(np.linalg.eigvalsh(G) > 0)
