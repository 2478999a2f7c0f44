"""Scenario configuration (YAML), task dispatch and deterministic artifact emission."""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from . import coefficients as coeffs
from .branch import trace_branch, uniqueness_condition
from .estimates import DEFAULT_K, absorbing_radius, moser_bounds, poincare_constants
from .fields import Field
from .geometry import SUPPORTED_DIMENSIONS, build_radial_mesh
from .nonlocal_op import KernelSpec, eval_lr
from .parabolic import MONITORS, integrate, sandwich_bounds
from .stability import stability_margin
from .stationary import (
    ProblemSpec,
    enumerate_rd_solutions,
    multi_solution_search,
    picard_stationary,
    solve_laplace,
)

log = logging.getLogger(__name__)

OUTPUT_ENV = "NONLOCAL_DIFFUSION_OUTPUT"
TASKS = ("stationary", "rd-enumerate", "multi-solution", "branch", "stability", "integrate", "estimates")

PROBLEM_DEFAULTS: dict[str, Any] = {
    "N": 128,
    "r": None,  # d / 2
    "coefficient": {"type": "constant", "value": 1.0},
    "f": {"type": "constant", "value": 1.0},
    "g": {"type": "constant", "value": 1.0},
    "u0": {"type": "constant", "value": 0.0},
}
PARAM_DEFAULTS: dict[str, Any] = {
    "tol": 1e-10,
    "damping": 0.5,
    "max_iter": 2000,
    "dt": 0.01,
    "T_end": 1.0,
    "r_points": 33,
    "thresholds": None,
    "mu_max": None,
    "grid_points": 10_000,
    "monitors": ["energy"],
    "stability": True,
    "epsilon": None,
    "rho0": 1.0,
    "t0": 1.0,
    "K": DEFAULT_K,
    "moser": {"p": 2.0, "h": 1.0, "k_max": 30, "C2": 1.0, "f_norm": 1.0, "U_h": 1.0},
    "state_stride": 1,
}
TOP_KEYS = {"problem", "task", "params", "output", "seed"}

FIELD_TYPES = {
    "constant": {"value"},
    "polynomial": {"coeffs"},
    "table": {"rho", "values"},
    "random": {"amplitude", "modes"},
    "sandwich": {"weight"},
}
COEFF_TYPES = {
    "constant": {"value"},
    "polynomial": {"coeffs", "m", "M", "lo", "hi"},
    "piecewise-linear": {"xs", "ys"},
    "logistic": {"m", "M", "center", "width"},
    "reciprocal": {"m", "M"},
    "staircase": {"a0", "widen", "m2"},
}


class ConfigError(ValueError):
    """Invalid scenario document; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None, column: int | None = None):
        self.key, self.line, self.column = key, line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass
class ScenarioConfig:
    problem: dict
    task: str
    params: dict
    output: str
    seed: int
    source: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"problem": self.problem, "task": self.task, "params": self.params,
                "output": self.output, "seed": self.seed}


def _check_keys(block: dict, allowed: set, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a mapping", key=where)
    for k in block:
        if k not in allowed:
            raise ConfigError(f"unknown key '{k}' in {where}", key=k)


def _check_descriptor(desc: Any, kinds: dict, where: str):
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigError(f"{where} must be a mapping with a 'type'", key=where)
    if desc["type"] not in kinds:
        raise ConfigError(f"unknown {where} type '{desc['type']}'", key=where)
    _check_keys(desc, kinds[desc["type"]] | {"type"}, where)


def parse_config(text: str) -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}", line=line, column=col) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("scenario document must be a mapping")
    _check_keys(raw, TOP_KEYS, "scenario")
    for required in ("problem", "task"):
        if required not in raw:
            raise ConfigError(f"missing required key '{required}'", key=required)

    prob_raw = raw["problem"]
    _check_keys(prob_raw, set(PROBLEM_DEFAULTS) | {"n", "d"}, "problem")
    for required in ("n", "d"):
        if required not in prob_raw:
            raise ConfigError(f"missing required key 'problem.{required}'", key=required)
    problem = copy.deepcopy(PROBLEM_DEFAULTS)
    problem.update(copy.deepcopy(prob_raw))
    if problem["n"] not in SUPPORTED_DIMENSIONS:
        raise ConfigError(f"unsupported dimension n={problem['n']}; expected one of {SUPPORTED_DIMENSIONS}", key="n")
    if not isinstance(problem["d"], (int, float)) or problem["d"] <= 0:
        raise ConfigError("d must be a positive number", key="d")
    if not isinstance(problem["N"], int) or problem["N"] < 4:
        raise ConfigError("N must be an integer >= 4", key="N")
    if problem["r"] is None:
        problem["r"] = 0.5 * problem["d"]
    if not 0 <= problem["r"] <= problem["d"]:
        raise ConfigError("r must lie in [0, d]", key="r")
    _check_descriptor(problem["coefficient"], COEFF_TYPES, "coefficient")
    for name in ("f", "g", "u0"):
        _check_descriptor(problem[name], FIELD_TYPES, name)
    for name in ("f", "g"):
        if problem[name]["type"] in ("random", "sandwich"):
            raise ConfigError(f"{name} cannot use type '{problem[name]['type']}'", key=name)

    task = raw["task"]
    if task not in TASKS:
        raise ConfigError(f"unknown task '{task}'; expected one of {TASKS}", key="task")

    params_raw = raw.get("params") or {}
    _check_keys(params_raw, set(PARAM_DEFAULTS), "params")
    params = copy.deepcopy(PARAM_DEFAULTS)
    moser_raw = params_raw.get("moser") or {}
    _check_keys(moser_raw, set(PARAM_DEFAULTS["moser"]), "moser")
    params.update({k: v for k, v in params_raw.items() if k != "moser"})
    params["moser"].update(moser_raw)
    for k in ("tol", "dt", "T_end", "rho0", "t0", "K"):
        if not isinstance(params[k], (int, float)) or params[k] <= 0:
            raise ConfigError(f"{k} must be a positive number", key=k)
    if not 0 < params["damping"] <= 1:
        raise ConfigError("damping must lie in (0, 1]", key="damping")
    if not set(params["monitors"]) <= MONITORS:
        raise ConfigError(f"monitors must be a subset of {sorted(MONITORS)}", key="monitors")
    if task == "multi-solution" and params["thresholds"] is None and problem["coefficient"]["type"] != "staircase":
        raise ConfigError("multi-solution needs params.thresholds or a staircase coefficient", key="thresholds")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer", key="seed")
    output = str(raw.get("output", "out"))
    return ScenarioConfig(problem, task, params, output, seed, source=raw)


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ------------------------------------------------------------------ builders


def build_field(desc: dict, mesh, rng: np.random.Generator, bounds=None) -> Field:
    kind = desc["type"]
    x = mesh.nodes
    if kind == "constant":
        return Field.constant(mesh, float(desc.get("value", 0.0)))
    if kind == "polynomial":
        return Field(mesh, np.polynomial.polynomial.polyval(x, desc["coeffs"]))
    if kind == "table":
        return Field(mesh, np.interp(x, desc["rho"], desc["values"]))
    if kind == "random":
        modes = int(desc.get("modes", 6))
        amp = float(desc.get("amplitude", 1.0))
        c = rng.normal(size=modes) / (1.0 + np.arange(modes))
        vals = sum(c[j] * np.cos((j + 0.5) * np.pi * x / mesh.radius) for j in range(modes))
        return Field(mesh, amp * vals)
    if kind == "sandwich":
        if bounds is None:
            raise ConfigError("sandwich initial state needs the stationary bounds", key="u0")
        lo, hi = bounds
        return lo + (hi - lo) * float(desc.get("weight", 0.5))
    raise ConfigError(f"unknown field type '{kind}'", key="type")


def build_coefficient(desc: dict, mesh, f: Field, kernel: KernelSpec, r: float):
    """Returns ``(CoefficientSpec, thresholds or None)``."""
    kind = desc["type"]
    if kind == "constant":
        return coeffs.constant(desc["value"]), None
    if kind == "polynomial":
        return coeffs.polynomial(desc["coeffs"], desc["m"], desc["M"], desc.get("lo", -1.0), desc.get("hi", 10.0)), None
    if kind == "piecewise-linear":
        return coeffs.piecewise_linear(desc["xs"], desc["ys"]), None
    if kind == "logistic":
        return coeffs.logistic(desc["m"], desc["M"], desc["center"], desc["width"]), None
    if kind == "reciprocal":
        return coeffs.clipped_reciprocal(desc["m"], desc["M"]), None
    if kind == "staircase":
        lr = eval_lr(solve_laplace(f), kernel, r).values
        widen = float(desc.get("widen", 0.2))
        return coeffs.staircase_coefficient(float(desc.get("a0", 1.0)), (1 - widen) * lr.min(),
                                            (1 + widen) * lr.max(), desc.get("m2"))
    raise ConfigError(f"unknown coefficient type '{kind}'", key="type")


def build_problem(config: ScenarioConfig):
    p = config.problem
    mesh = build_radial_mesh(p["n"], p["d"], p["N"])
    rng = np.random.default_rng(config.seed)
    f = build_field(p["f"], mesh, rng)
    kernel = KernelSpec(build_field(p["g"], mesh, rng))
    coeff, thresholds = build_coefficient(p["coefficient"], mesh, f, kernel, p["r"])
    problem = ProblemSpec(mesh, f, kernel, coeff, float(p["r"]))
    bounds = sandwich_bounds(problem) if p["u0"]["type"] == "sandwich" else None
    u0 = build_field(p["u0"], mesh, rng, bounds)
    return problem.with_u0(u0), thresholds


# ------------------------------------------------------------------ writers


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header_comment: str, columns: list[str], rows) -> None:
    buf = io.StringIO(newline="")
    buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "numerator") and hasattr(obj, "denominator"):
        return float(obj)
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    path.write_bytes(text.encode("utf-8"))


def write_jsonl(path: Path, records) -> None:
    lines = [json.dumps(_jsonable(r), sort_keys=True, ensure_ascii=False) for r in records]
    path.write_bytes(("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))


def field_rows(mesh, *columns):
    for i, rho in enumerate(mesh.nodes):
        yield (i, rho, *(c[i] for c in columns))


def coefficient_rows(coeff, hi: float, samples: int = 2001):
    xi = np.linspace(-0.1 * hi, hi, samples)
    return zip(xi, coeff(xi), coeff.derivative(xi))


# ------------------------------------------------------------------ tasks


def _task_stationary(problem, thresholds, params, out: Path) -> list[Path]:
    sol = picard_stationary(problem, None, params["damping"], params["tol"], params["max_iter"])
    p = out / "solution.csv"
    write_csv(p, "stationary solution u_r and l_r(u_r) at the radial nodes", ["node", "rho", "u", "lr"],
              field_rows(problem.mesh, sol.u.values, sol.lr_field.values))
    s = out / "summary.json"
    write_json(s, {"r": problem.r, "iterations": sol.iterations, "residual": sol.residual,
                   "converged": sol.converged})
    if not sol.converged:
        raise RuntimeError(f"Picard iteration did not converge (residual {sol.residual:.3e})")
    return [p, s]


def _task_rd(problem, thresholds, params, out: Path) -> list[Path]:
    scan = enumerate_rd_solutions(problem, params["mu_max"], params["grid_points"])
    roots = out / "roots.csv"
    write_csv(roots, "roots mu of mu*a(mu) = l_d(phi); u_d = phi/a(mu)",
              ["index", "mu", "bracket_lo", "bracket_hi", "equation_residual"],
              ((k, r.mu, r.bracket[0], r.bracket[1], r.equation_residual) for k, r in enumerate(scan)))
    curve = out / "rd_curve.csv"
    write_csv(curve, f"mu*a(mu) - c on the scan grid, c = l_d(phi) = {scan.c!r}", ["mu", "mu_a_mu_minus_c"],
              zip(scan.mu_grid, scan.scan_values))
    coef = out / "coefficient.csv"
    write_csv(coef, "diffusion law a(xi) and a'(xi)", ["xi", "a", "a_prime"],
              coefficient_rows(problem.coeff, float(scan.mu_grid[-1])))
    sols = out / "rd_solutions.csv"
    write_csv(sols, "r = d solutions u_d per root", ["root", "node", "rho", "u"],
              ((k, i, rho, u) for k, r in enumerate(scan) for i, rho, u in field_rows(problem.mesh, r.u_d.values)))
    summary = out / "rd_summary.json"
    write_json(summary, {"c": scan.c, "roots": [r.mu for r in scan], "count": len(scan)})
    return [roots, curve, coef, sols, summary]


def _task_multi(problem, thresholds, params, out: Path) -> list[Path]:
    th = params["thresholds"] if params["thresholds"] is not None else thresholds
    rep = multi_solution_search(problem, th, params["tol"], params["damping"], params["max_iter"])
    sols = out / "solutions.csv"
    rows = ((p.index, i, rho, u, lr) for p in rep.pairs if p.solution is not None
            for i, rho, u, lr in field_rows(problem.mesh, p.solution.u.values, p.solution.lr_field.values))
    write_csv(sols, "radial solutions seeded per threshold pair m_i <= l_r(u) <= m_{i+1}",
              ["pair", "node", "rho", "u", "lr"], rows)
    report = out / "multi_report.json"
    write_json(report, {
        "I_r": rep.I_r,
        "thresholds": list(th),
        "pairs": [{"index": p.index, "lower": p.lower, "upper": p.upper, "target": p.target,
                   "inclusion_ok": p.inclusion_ok, "extremum_ok": p.extremum_ok, "lr_within": p.lr_within,
                   "converged": p.solution.converged if p.solution else None} for p in rep.pairs],
        "failures": rep.failures,
        "solution_count": len(rep.solutions),
    })
    coef = out / "coefficient.csv"
    write_csv(coef, "diffusion law a(xi) and a'(xi) with thresholds " + " ".join(_fmt(t) for t in th),
              ["xi", "a", "a_prime"], coefficient_rows(problem.coeff, 1.1 * float(th[-1])))
    return [sols, report, coef]


def _task_branch(problem, thresholds, params, out: Path) -> list[Path]:
    grid = np.linspace(0.0, problem.mesh.d, params["r_points"])
    br = trace_branch(problem, grid, params["tol"], params["damping"], params["max_iter"])
    margins = []
    for r, s in br.entries:
        margins.append(stability_margin(s, problem.with_r(r)).min_rayleigh if params["stability"] else float("nan"))
    path = out / "branch.csv"
    write_csv(path, "branch r -> u_r of stationary solutions with stability margin per r",
              ["r", "node", "rho", "u", "min_rayleigh"],
              ((r, i, rho, u, margins[j]) for j, (r, s) in enumerate(br.entries)
               for i, rho, u in field_rows(problem.mesh, s.u.values)))
    uniq = uniqueness_condition(problem, br.mu_d, params["epsilon"]) if math.isfinite(br.mu_d) else None
    summary = out / "branch_summary.json"
    write_json(summary, {
        "radii": br.radii, "monotone_flags": br.monotone_flags, "endpoint_match": br.endpoint_match,
        "converged": [s.converged for _, s in br.entries], "lr_in_range": br.lr_in_range,
        "mu_d": br.mu_d, "min_rayleigh": margins,
        "uniqueness": None if uniq is None else {"lhs": uniq.lhs, "holds": uniq.holds, "C1": uniq.C1,
                                                 "epsilon": uniq.epsilon, "mu_d": uniq.mu_d},
    })
    if not br.all_converged:
        raise RuntimeError("branch has non-converged entries")
    return [path, summary]


def _task_stability(problem, thresholds, params, out: Path) -> list[Path]:
    sol = picard_stationary(problem, None, params["damping"], params["tol"], params["max_iter"])
    rep = stability_margin(sol, problem)
    path = out / "stability.json"
    write_json(path, {"r": problem.r, "min_rayleigh": rep.min_rayleigh, "stable": rep.stable,
                      "lower_bound_analytic": rep.lower_bound_analytic, "converged": rep.converged,
                      "iterations": rep.iterations, "bracket": rep.bracket})
    mode = out / "stability_mode.csv"
    write_csv(mode, "minimizing test field of the stability form", ["node", "rho", "phi"],
              field_rows(problem.mesh, rep.eigenvector))
    return [path, mode]


def _task_integrate(problem, thresholds, params, out: Path) -> list[Path]:
    monitors = set(params["monitors"])
    candidates = []
    if "steady" in monitors:
        candidates = [r.u_d for r in enumerate_rd_solutions(problem)] if problem.r == problem.mesh.d else [
            picard_stationary(problem, None, params["damping"], params["tol"], params["max_iter"]).u]
    series = integrate(problem, params["T_end"], params["dt"], monitors, candidates=candidates)
    stride = max(1, int(params["state_stride"]))
    ts = out / "timeseries.csv"
    write_csv(ts, "trajectory u(t) at the radial nodes", ["t", "node", "rho", "u"],
              ((t, i, rho, u) for k, (t, s) in enumerate(zip(series.times, series.states)) if k % stride == 0
               for i, rho, u in field_rows(problem.mesh, s.values)))
    mon = out / "monitor_log.jsonl"
    write_jsonl(mon, series.monitor_log)
    paths = [ts, mon]
    if series.energy_trace:
        en = out / "energy.csv"
        write_csv(en, "discrete energy inequality terms per step", ["step", "l2_sq", "v_sq", "dual_sq", "lhs", "rhs"],
                  ((e["step"], e["l2_sq"], e["v_sq"], e["dual_sq"], e["lhs"], e["rhs"]) for e in series.energy_trace))
        paths.append(en)
    if series.steady_distances:
        sd = out / "steady_distances.csv"
        write_csv(sd, "L2 distance to each stationary candidate", ["t"] + [f"d{k}" for k in range(len(candidates))],
                  ((t, *ds) for t, ds in zip(series.times, series.steady_distances)))
        paths.append(sd)
    if series.monitor_log:
        raise RuntimeError(f"{len(series.monitor_log)} monitor violations")
    return paths


def _task_estimates(problem, thresholds, params, out: Path) -> list[Path]:
    consts = poincare_constants(problem.mesh)
    cpath = out / "constants.json"
    write_json(cpath, {**consts.to_dict(), "K": params["K"]})
    ab = absorbing_radius(problem, params["rho0"], params["t0"], params["K"], consts)
    apath = out / "absorbing.json"
    write_json(apath, ab.to_dict())
    paths = [cpath, apath]
    mo = params["moser"]
    n = problem.mesh.n if problem.mesh.n >= 3 else 3
    rep = moser_bounds(n, mo["p"], mo["h"], int(mo["k_max"]), mo["C2"], mo["f_norm"], mo["U_h"])
    mpath = out / "moser.json"
    write_json(mpath, rep.to_dict())
    paths.append(mpath)
    return paths


TASK_RUNNERS = {
    "stationary": _task_stationary,
    "rd-enumerate": _task_rd,
    "multi-solution": _task_multi,
    "branch": _task_branch,
    "stability": _task_stability,
    "integrate": _task_integrate,
    "estimates": _task_estimates,
}


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_time: dict
    files: dict
    status: str
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {"config": self.config, "version": self.version, "wall_time": self.wall_time,
                "files": self.files, "status": self.status, "error": self.error}


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(config: ScenarioConfig, output: str | os.PathLike | None = None) -> RunManifest:
    """Run the configured task and write artifacts plus ``manifest.json``.

    Output directory precedence: ``output`` argument, ``$NONLOCAL_DIFFUSION_OUTPUT``, ``config.output``.
    """
    out = Path(output or os.environ.get(OUTPUT_ENV) or config.output)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    write_json(cfg_path, config.to_dict())
    t0 = time.perf_counter()
    status, error, files = "ok", None, [cfg_path]
    try:
        problem, thresholds = build_problem(config)
        files += TASK_RUNNERS[config.task](problem, thresholds, config.params, out)
    except Exception as exc:  # noqa: BLE001 - task failures are reported in the manifest
        log.error("task %s failed: %s", config.task, exc)
        log.debug("traceback", exc_info=True)
        status, error = "failed", f"{type(exc).__name__}: {exc}"
        files += [p for p in sorted(out.iterdir()) if p.is_file() and p.name != "manifest.json" and p not in files]
    wall = {config.task: time.perf_counter() - t0}
    manifest = RunManifest(config.to_dict(), __version__, wall,
                           {p.name: _digest(p) for p in files if p.exists()}, status, error)
    write_json(out / "manifest.json", manifest.to_dict())
    return manifest
