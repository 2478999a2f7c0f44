"""Acceptance criteria 1-12, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` (or this file directly); a summary with
one PASS/FAIL line per criterion is printed at the end of the session.
"""
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from nonlocal_diffusion import (
    Field,
    absorbing_radius,
    build_radial_mesh,
    enumerate_rd_solutions,
    integrate,
    multi_solution_search,
    picard_stationary,
    poincare_constants,
    sandwich_bounds,
    solve_laplace,
    solve_linear_radial,
    stability_margin,
    steady_state_detect,
    trace_branch,
    uniqueness_condition,
)
from nonlocal_diffusion import coefficients as co
from nonlocal_diffusion.estimates import moser_bounds, moser_sigma, moser_theta
from nonlocal_diffusion.fields import distance
from nonlocal_diffusion.scenario import parse_config, run_scenario
from nonlocal_diffusion.stationary import apply_operator
from conftest import GENTLE, STEEP, make_problem, random_field
from oracles import shell_z_scores
from test_estimates import random_admissible
from test_stationary import brute_force_roots, manufactured, staircase_problem

acceptance = pytest.mark.acceptance
TOL = 1e-10


@acceptance(1, "shell weights vs 10^6-sample Monte Carlo within 3 sigma on 20^3 grid per n")
def test_criterion_01_geometric_oracle():
    start = time.perf_counter()
    exceed = {}
    for n in (1, 2, 3):
        z, _ = shell_z_scores(n)
        exceed[n] = (int(np.count_nonzero(z > 3)), float(z.max()))
    elapsed = time.perf_counter() - start
    assert all(count == 0 for count, _ in exceed.values()), f"3-sigma exceedances (count, max z) per n: {exceed}"
    assert elapsed <= 120


@acceptance(2, "radial solver: error ratio >= 3.5 per doubling N=32..512, error <= 1e-5 at N=512")
def test_criterion_02_radial_convergence():
    for n in (1, 2, 3):
        for A in (1.0, 2.5):
            errs = []
            for N in (32, 64, 128, 256, 512):
                mesh = build_radial_mesh(n, 2.0, N)
                u = solve_linear_radial(Field.constant(mesh, A), Field.constant(mesh, 1.0))
                errs.append(np.max(np.abs(u.values - (1 - mesh.nodes**2) / (2 * n * A))))
            assert errs[-1] <= 1e-5
            # the scheme reproduces these quadratics to roundoff; a ratio is only
            # meaningful above roundoff
            for coarse, fine in zip(errs, errs[1:]):
                assert fine <= 1e-13 or coarse / fine >= 3.5, (n, A, errs)
        # nontrivial case where the discretization error is visible
        uex, fex = manufactured(n)
        errs = []
        for N in (32, 64, 128, 256, 512):
            mesh = build_radial_mesh(n, 2.0, N)
            u = solve_linear_radial(Field.constant(mesh, 1.0), Field.from_function(mesh, fex))
            errs.append(np.max(np.abs(u.values - uex(mesh.nodes))))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        assert np.all(ratios >= 3.5), (n, ratios)
        assert errs[-1] <= 1e-4


@acceptance(3, "r=d root 4pi/90 within 1e-6; staircase law >= 2 roots matching a 1e5-point scan")
def test_criterion_03_rd_enumeration():
    p = make_problem(n=3, d=2.0, N=1024, coeff=co.constant(2.0), r=2.0)
    roots = enumerate_rd_solutions(p)
    assert len(roots) == 1
    assert abs(roots[0].mu - 4 * math.pi / 90) <= 1e-6, roots[0].mu - 4 * math.pi / 90
    stair, _ = staircase_problem(r=2.0)
    scan = enumerate_rd_solutions(stair)
    assert len(scan) >= 2
    assert len(scan) == brute_force_roots(stair, scan.c, 100_000)


@acceptance(4, "pointwise comparison h = apply_operator(B, u_A) >= f - 1e-8 for 100 random triples")
def test_criterion_04_pointwise_comparison():
    rng = np.random.default_rng(4)
    passed, worst = 0, 0.0
    for _ in range(100):
        mesh = build_radial_mesh(int(rng.integers(1, 4)), 2.0, 64)
        m = 0.5
        A = Field(mesh, m + np.abs(random_field(mesh, rng, dirichlet=False).values))
        B = A + Field(mesh, np.abs(random_field(mesh, rng, dirichlet=False).values))
        f = Field(mesh, np.abs(random_field(mesh, rng, dirichlet=False).values))
        h = apply_operator(B, solve_linear_radial(A, f))
        gap = float(np.min(h - f.values[:-1]))
        worst = min(worst, gap)
        passed += gap >= -1e-8
    assert passed == 100, f"{passed}/100 triples satisfy h >= f - 1e-8; worst h - f = {worst:.3g}"


@acceptance(5, "monotone 33-point branch, endpoints within 10 tol of independent solves")
def test_criterion_05_branch_monotonicity():
    p = make_problem(coeff=co.logistic(**GENTLE))
    assert p.coeff.monotone_nonincreasing
    roots = enumerate_rd_solutions(p)
    assert uniqueness_condition(p, roots[0].mu).holds
    br = trace_branch(p, np.linspace(0, p.mesh.d, 33), tol=TOL)
    assert br.all_converged and br.monotonicity_violations == 0
    u_zero = solve_linear_radial(Field.constant(p.mesh, float(p.coeff(0.0))), p.f)
    u_d = solve_laplace(p.f) / float(p.coeff(roots[0].mu))
    assert distance(br.entries[0][1].u, u_zero) <= 10 * TOL
    assert distance(br.entries[-1][1].u, u_d) <= 10 * TOL


@acceptance(6, "branch entries stable (min_rayleigh >= -1e-8 M); a' = 0 gives >= m - 1e-8")
def test_criterion_06_stability():
    p = make_problem(coeff=co.logistic(**GENTLE))
    mu = enumerate_rd_solutions(p)[0].mu
    assert uniqueness_condition(p, mu).holds
    for r, s in trace_branch(p, tol=TOL).entries:
        assert stability_margin(s, p.with_r(r)).min_rayleigh >= -1e-8 * p.coeff.M
    for n in (1, 2, 3):
        q = make_problem(n=n, coeff=co.constant(0.6))
        for r in (0.0, 1.0, 2.0):
            sol = picard_stationary(q.with_r(r), tol=TOL)
            assert stability_margin(sol, q.with_r(r)).min_rayleigh >= 0.6 - 1e-8


@acceptance(7, "10^4-step flow stays in the sandwich u_0 <= u <= u_d within 1e-6 max u_d")
def test_criterion_07_comparison_sandwich():
    for law in (co.logistic(**STEEP), staircase_problem(r=1.0, N=64)[0].coeff):
        p = make_problem(coeff=law, r=1.0)
        lo, hi = sandwich_bounds(p)
        ser = integrate(p, 100.0, 0.01, monitors=("comparison",), u0=(lo + hi) * 0.5, comparison_rtol=1e-6)
        assert len(ser.times) == 10_001
        assert not ser.violations("comparison"), ser.violations("comparison")[:3]


def energy_scenarios():
    rng = np.random.default_rng(8)
    for n in (1, 2, 3):
        for law in (co.constant(1.0), co.logistic(**STEEP), co.clipped_reciprocal(0.2, 1.0),
                    staircase_problem(r=1.0, N=48)[0].coeff):
            f = random_field(build_radial_mesh(n, 2.0, 48), rng, dirichlet=False)
            p = make_problem(n=n, N=48, coeff=law, f=f)
            yield p, random_field(p.mesh, rng), float(rng.choice([1e-3, 1e-2, 1e-1]))


@acceptance(8, "discrete energy inequality + 1e-8 at every step")
def test_criterion_08_energy_estimate():
    count = 0
    for p, u0, dt in energy_scenarios():
        ser = integrate(p, 200 * dt, dt, monitors=("energy",), u0=u0, energy_tol=1e-8)
        worst = max(e["lhs"] - e["rhs"] for e in ser.energy_trace)
        assert worst <= 1e-8, (p.mesh, p.coeff.name, dt, worst)
        count += len(ser.energy_trace)
    assert count == 12 * 200


@acceptance(9, "Moser: sigma(1)=5/7, theta=7/8 exactly; contraction for k<=30; partial sums bounded")
def test_criterion_09_moser():
    assert moser_sigma(3, Fraction(2), 1) == Fraction(5, 7)
    assert moser_theta(3, Fraction(2)) == Fraction(7, 8)
    rng = np.random.default_rng(9)
    for n, p, h in random_admissible(rng, 100):
        theta, s0 = moser_theta(n, p), moser_sigma(n, p, h)
        for k in range(31):
            assert moser_sigma(n, p, 2**k * h) <= theta**k * s0
        rep = moser_bounds(n, p, h, 30, 1.0, 1.0, 1)
        assert max(rep.lambda1_partial) <= rep.sigma_values[0] / (1 - theta)
        assert max(rep.lambda2_partial) <= moser_sigma(n, p, 2 * h) / (1 - theta) ** 2


@acceptance(10, "eigenvalues within 1e-3 of pi^2 and (pi/2)^2; absorbing radius exact when a' = 0")
def test_criterion_10_constants():
    assert abs(poincare_constants(build_radial_mesh(3, 2.0, 256)).lambda_ - math.pi**2) <= 1e-3
    assert abs(poincare_constants(build_radial_mesh(1, 2.0, 256)).lambda_ - (math.pi / 2) ** 2) <= 1e-3
    for n in (1, 2, 3):
        p = make_problem(n=n, coeff=co.constant(1.4))
        rep = absorbing_radius(p, 1.5, 0.7)
        assert rep.a1 == 0.0
        a3 = 0.7 * rep.lambda_ * rep.f_norm**2 / 1.4**2 + 1.5**2 / 1.4
        a2 = 0.7 * rep.f_norm**2 / 1.4
        assert rep.a3 == a3 and rep.a2 == a2
        assert rep.radius == a3 / 0.7 + a2


@acceptance(11, "identical config and seed give byte-identical artifacts")
def test_criterion_11_determinism(tmp_path):
    configs = sorted((Path(__file__).resolve().parents[1] / "demos" / "configs").glob("*.yaml"))
    assert len(configs) >= 7
    for path in configs:
        cfg = parse_config(path.read_text())
        if cfg.task == "integrate":
            cfg.params["T_end"] = 0.5
        first = run_scenario(cfg, tmp_path / path.stem / "1")
        second = run_scenario(cfg, tmp_path / path.stem / "2")
        assert first.ok and first.files == second.files
        for name in first.files:
            a = (tmp_path / path.stem / "1" / name).read_bytes()
            assert a == (tmp_path / path.stem / "2" / name).read_bytes()


@acceptance(12, "settled flows from each basin start match a stationary candidate within 1e-4")
def test_criterion_12_convergence_experiment():
    p, thresholds = staircase_problem(r=1.5, N=64)
    cands = multi_solution_search(p, thresholds).solutions
    assert len(cands) == 2
    outcome = []
    for k, sol in enumerate(cands):
        for factor in (0.8, 1.2):
            ser = integrate(p, 60.0, 0.05, monitors=("steady",), u0=sol.u * factor, candidates=cands)
            match = steady_state_detect(ser, cands, 1e-9)
            assert match is not None, f"start {k} x{factor} has not settled"
            assert match.distance <= 1e-4
            outcome.append((k, factor, match.index))
    print("basin outcome (start, factor, matched):", outcome)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
