import numpy as np
import pytest

from nonlocal_diffusion import Field, KernelSpec, ProblemSpec, build_radial_mesh
from nonlocal_diffusion import coefficients as co


def make_problem(n=3, d=2.0, N=64, coeff=None, r=1.0, f=1.0, g=1.0, u0=None):
    mesh = build_radial_mesh(n, d, N)
    ff = f if isinstance(f, Field) else Field.constant(mesh, f)
    gg = g if isinstance(g, Field) else Field.constant(mesh, g)
    return ProblemSpec(mesh, ff, KernelSpec(gg), coeff or co.constant(1.0), r, u0)


def random_field(mesh, rng, modes=6, amplitude=1.0, dirichlet=True):
    """Smooth random radial field; vanishes at the boundary when ``dirichlet``."""
    x = mesh.nodes / mesh.radius
    c = rng.normal(size=modes) / (1.0 + np.arange(modes))
    if dirichlet:
        vals = sum(c[j] * np.cos((j + 0.5) * np.pi * x) for j in range(modes))
    else:
        vals = sum(c[j] * np.cos(j * np.pi * x) for j in range(modes))
    return Field(mesh, amplitude * vals)


# A gently decreasing law for which the uniqueness condition holds on the unit ball.
GENTLE = dict(m=0.8, M=1.2, center=0.3, width=0.5)
# A steep decreasing law: single r = d root, uniqueness condition fails.
STEEP = dict(m=0.5, M=1.5, center=0.15, width=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    detail = ""
    if rep.failed and call.excinfo is not None:
        detail = str(call.excinfo.value).strip().splitlines()[0][:160] if str(call.excinfo.value).strip() else ""
    _ACCEPTANCE[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[number]
        line = f"criterion {number:2d} [{status}] {title}"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))
