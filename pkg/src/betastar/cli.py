"""Command-line front end: ``betastar analytic|simulate|verify ...``.

Exit codes: 0 success, 1 verification failure, 2 parameter error,
3 simulation budget exceeded.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import click
import numpy as np

from . import __version__, analytic, harness
from .analytic import BetaStarParams
from .errors import BetaStarError, InfiniteExpectation, ParameterError
from .geometry import Polytope, f_vector, inradius, t_functional, write_off
from .sampling import (NotTerminated, RngStream, cap_covering_experiment, sample_beta_star_polytope,
                       sample_poisson_polytope, sample_voronoi_typical_cell, sample_zero_cell)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARAMETER = 2
EXIT_BUDGET = 3

SEED_ENV = "BETASTAR_SEED"
DEFAULT_SEED = 20240917

# lambda grids of the figure presets
FIGURE5_POINTS = 40
FIGURE6_LAMBDAS = tuple(round(0.125 * i, 3) for i in range(1, 41))


@dataclass
class RunConfig:
    """Validated description of one CLI run."""

    command: str
    params: dict[str, Any]
    replicates: int = 1
    n_max: int = 10 ** 6
    seed: int = DEFAULT_SEED
    tolerances: dict[str, float] = field(default_factory=lambda: {"z_max": harness.Z_MAX,
                                                                  "failure_budget": 0.0})
    output: dict[str, Any] = field(default_factory=lambda: {"path": None, "format": "text"})

    def validate(self) -> "RunConfig":
        if self.replicates < 1:
            raise ParameterError(f"replicates must be >= 1, got {self.replicates}")
        if self.n_max < 1:
            raise ParameterError(f"n_max must be >= 1, got {self.n_max}")
        if not 0 <= self.seed < 2 ** 64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not 0 <= self.tolerances.get("failure_budget", 0.0) <= 1:
            raise ParameterError("failure_budget must lie in [0, 1]")
        if self.tolerances.get("z_max", 1.0) <= 0:
            raise ParameterError("z_max must be positive")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return cls(**data).validate()


def provenance(config: RunConfig) -> dict:
    return {
        "program": "betastar",
        "version": __version__,
        "seed": config.seed,
        "command": config.command,
        "params": config.params,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise click.BadParameter(f"{SEED_ENV}={raw!r} is not an integer")


class _State:
    def __init__(self, as_json: bool, threads: int):
        self.as_json = as_json
        self.threads = threads


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn: Callable) -> Callable:
    """Map library errors onto exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ParameterError, InfiniteExpectation) as exc:
            _fail(EXIT_PARAMETER, str(exc))
        except BetaStarError as exc:
            _fail(EXIT_PARAMETER, str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _emit(state: _State, config: RunConfig, payload: dict, lines: list[str]) -> None:
    if state.as_json:
        click.echo(json.dumps({"provenance": provenance(config), **payload}, indent=2,
                              default=_json_default))
    else:
        for line in lines:
            click.echo(line)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _load_config(ctx: click.Context, _param, value):
    if value is None:
        return None
    try:
        data = json.loads(Path(value).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(f"cannot read config {value}: {exc}")
    if not isinstance(data, dict):
        raise click.BadParameter("config must be a JSON object")
    ctx.default_map = {**(ctx.default_map or {}), **data}
    return value


@click.group()
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config, is_eager=True,
              expose_value=False, help="JSON file with option defaults, nested by command name.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker threads for replicates.")
@click.version_option(__version__, prog_name="betastar")
@click.pass_context
def main(ctx: click.Context, as_json: bool, threads: int) -> None:
    """Beta* polytopes, hyperbolic zero cells and Voronoi cells."""
    ctx.obj = _State(as_json, threads)


# ---------------------------------------------------------- analytic ---

@main.group("analytic")
def analytic_group() -> None:
    """Closed-form and quadrature expectations."""


def _params_options(fn):
    fn = click.option("--alpha", type=float, required=True)(fn)
    fn = click.option("--beta", type=float, required=True)(fn)
    fn = click.option("--d", "d", type=int, required=True)(fn)
    return fn


def _fv_lines(name: str, fv) -> list[str]:
    lines = [f"{name} (route {fv.route.value})"]
    lines += [f"  f_{k} = {v:.12g}" for k, v in enumerate(fv.values)]
    return lines


@analytic_group.command("f-vector")
@_params_options
@click.option("--route", type=click.Choice(["auto", "general"]), default="auto", show_default=True)
@click.option("--verify", "verify_routes", is_flag=True, help="Cross-check closed form and quadrature.")
@click.pass_obj
@_guard
def analytic_f_vector(state, d, beta, alpha, route, verify_routes):
    """Expected f-vector of the beta* polytope."""
    params = BetaStarParams(d, alpha, beta)
    fv = analytic.expected_f_vector(params, route=route, verify=verify_routes)
    cfg = RunConfig("analytic f-vector", params.as_dict(), seed=0).validate()
    _emit(state, cfg, {"f_vector": list(fv.values), "route": fv.route.value,
                       "route_deviation": fv.route_deviation},
          _fv_lines("expected f-vector", fv))


@analytic_group.command("phase")
@_params_options
@click.pass_obj
@_guard
def analytic_phase(state, d, beta, alpha):
    """Phase of the beta* set."""
    params = BetaStarParams(d, alpha, beta)
    phase = analytic.phase_classify(params)
    cfg = RunConfig("analytic phase", params.as_dict(), seed=0)
    _emit(state, cfg, {"phase": phase.value}, [phase.value])


@analytic_group.command("zero-cell")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--beta", type=float, default=None, help="Defaults to (d+1)/2.")
@click.pass_obj
@_guard
def analytic_zero_cell(state, d, lam, beta):
    """Expected f-vector of the hyperbolic zero cell."""
    beta = (d + 1) / 2 if beta is None else beta
    fv = analytic.expected_f_vector_zero_cell(d, lam, beta)
    alpha = analytic.alpha_for_zero_cell(d, lam, beta)
    cfg = RunConfig("analytic zero-cell", {"d": d, "lambda": lam, "beta": beta}, seed=0)
    _emit(state, cfg, {"alpha": alpha, "f_vector": list(fv.values), "route": fv.route.value},
          [f"alpha = {alpha:.12g}"] + _fv_lines("expected zero-cell f-vector", fv))


@analytic_group.command("voronoi")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.pass_obj
@_guard
def analytic_voronoi(state, d, lam):
    """Expected f-vector of the typical hyperbolic Voronoi cell."""
    fv = analytic.expected_f_vector_voronoi(d, lam)
    alpha = analytic.alpha_for_voronoi(d, lam)
    cfg = RunConfig("analytic voronoi", {"d": d, "lambda": lam}, seed=0)
    _emit(state, cfg, {"alpha": alpha, "f_vector": list(fv.values), "route": fv.route.value},
          [f"alpha = {alpha:.12g}"] + _fv_lines("expected Voronoi f-vector", fv))


@analytic_group.command("t")
@_params_options
@click.option("--a", "a", type=float, required=True)
@click.option("--b", "b", type=float, required=True)
@click.pass_obj
@_guard
def analytic_t(state, d, beta, alpha, a, b):
    """Expected T-functional."""
    value = analytic.expected_T(d, alpha, beta, a, b)
    cfg = RunConfig("analytic t", {"d": d, "alpha": alpha, "beta": beta, "a": a, "b": b}, seed=0)
    _emit(state, cfg, {"expected_T": value}, [f"E T_(a={a:g}, b={b:g}) = {value:.12g}"])


@analytic_group.command("intrinsic")
@_params_options
@click.option("--k", "k", type=int, required=True)
@click.pass_obj
@_guard
def analytic_intrinsic(state, d, beta, alpha, k):
    """Expected k-th intrinsic volume."""
    value = analytic.expected_intrinsic_volume(d, alpha, beta, k)
    cfg = RunConfig("analytic intrinsic", {"d": d, "alpha": alpha, "beta": beta, "k": k}, seed=0)
    _emit(state, cfg, {"expected_intrinsic_volume": value}, [f"E V_{k} = {value:.12g}"])


@analytic_group.command("components")
@_params_options
@click.pass_obj
@_guard
def analytic_components(state, d, beta, alpha):
    """External (I*) and internal (J~) angle sums entering the f-vector."""
    params = BetaStarParams(d, alpha, beta)
    lam = 1.0 if math.isclose(beta, (d + 1) / 2) else 2 * beta - d
    rows = []
    for s in range((d - 1) // 2 + 1):
        m = d - 2 * s
        ext = analytic.ext_angle_sum(alpha, m, lam)
        for ell in range(1, m + 1):
            j = analytic.j_tilde_sum(m, ell, beta - s - 0.5)
            rows.append({"m": m, "l": ell, "ext_angle_sum": ext, "int_angle_sum": j})
    cfg = RunConfig("analytic components", params.as_dict(), seed=0)
    lines = ["m  l  ext_angle_sum        int_angle_sum"]
    lines += [f"{r['m']:<2} {r['l']:<2} {r['ext_angle_sum']:<20.12g} {r['int_angle_sum']:.12g}"
              for r in rows]
    _emit(state, cfg, {"components": rows}, lines)


# ---------------------------------------------------------- simulate ---

@main.group("simulate")
def simulate_group() -> None:
    """Perfect simulation; writes JSONL statistics and optional OFF files."""


def _sim_options(fn):
    fn = click.option("--out", type=click.Path(file_okay=False), default=None,
                      help="Directory for replicates.jsonl and OFF files (stdout if omitted).")(fn)
    fn = click.option("--off/--no-off", default=False, help="Also write one OFF file per replicate.")(fn)
    fn = click.option("--budget", type=float, default=0.0, show_default=True,
                      help="Tolerated fraction of non-terminated runs.")(fn)
    fn = click.option("--n-max", type=int, default=10 ** 6, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=None, help=f"Master seed (env {SEED_ENV}).")(fn)
    fn = click.option("--reps", type=int, default=1, show_default=True)(fn)
    fn = click.option("--t-a", type=float, default=1.0, show_default=True)(fn)
    fn = click.option("--t-b", type=float, default=1.0, show_default=True)(fn)
    return fn


def _stats_row(i: int, stream: RngStream, result) -> dict:
    if isinstance(result, NotTerminated):
        return {"replicate": i, "stream": stream.stream, "terminated": False, "atoms": result.atoms}
    return {"replicate": i, "stream": stream.stream, "terminated": True}


def _run_simulation(state: _State, config: RunConfig, sampler: Callable[[RngStream], Any],
                    describe: Callable[[Polytope], dict], out: str | None, off: bool) -> None:
    config.validate()
    results = harness.run_replicates(sampler, config.replicates, config.seed, state.threads)
    rows = []
    for i, res in enumerate(results):
        row = _stats_row(i, RngStream(config.seed, i), res)
        if not isinstance(res, NotTerminated):
            row.update(describe(res))
        rows.append(row)
    header = {"provenance": provenance(config)}
    text = "\n".join(json.dumps(r, default=_json_default) for r in [header] + rows) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "replicates.jsonl").write_text(text)
        if off:
            for i, res in enumerate(results):
                if isinstance(res, NotTerminated):
                    continue
                buf = io.StringIO()
                write_off(res, buf)
                lines = buf.getvalue().split("\n", 1)
                meta = json.dumps(provenance(config), default=_json_default)
                (path / f"replicate_{i:05d}.off").write_text(f"{lines[0]}\n# {meta}\n{lines[1]}")
    failed = sum(isinstance(r, NotTerminated) for r in results)
    if failed / len(results) > config.tolerances["failure_budget"]:
        _fail(EXIT_BUDGET, f"{failed} of {len(results)} runs did not terminate within "
                           f"n_max={config.n_max}")


def _describe(a: float, b: float) -> Callable[[Polytope], dict]:
    def describe(p: Polytope) -> dict:
        row = {"f_vector": list(f_vector(p))}
        if np.all(p.offsets > 0):
            row["inradius"] = inradius(p)
            row[f"T_{a:g}_{b:g}"] = t_functional(p, a, b)
        row["max_vertex_norm"] = float(np.linalg.norm(p.vertices, axis=1).max())
        return row

    return describe


def _config(command, params, reps, n_max, seed, budget, out=None) -> RunConfig:
    return RunConfig(command, params, replicates=reps, n_max=n_max,
                     seed=_default_seed() if seed is None else seed,
                     tolerances={"z_max": harness.Z_MAX, "failure_budget": budget},
                     output={"path": out, "format": "jsonl"}).validate()


@simulate_group.command("polytope")
@_params_options
@_sim_options
@click.pass_obj
@_guard
def simulate_polytope(state, d, beta, alpha, reps, seed, n_max, budget, off, out, t_a, t_b):
    """Beta* polytopes."""
    params = BetaStarParams(d, alpha, beta)
    cfg = _config("simulate polytope", params.as_dict(), reps, n_max, seed, budget, out)
    _run_simulation(state, cfg, lambda s: sample_beta_star_polytope(params, s, n_max),
                    _describe(t_a, t_b), out, off)


@simulate_group.command("zero-cell")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--beta", type=float, default=None, help="Defaults to (d+1)/2.")
@_sim_options
@click.pass_obj
@_guard
def simulate_zero_cell(state, d, lam, beta, reps, seed, n_max, budget, off, out, t_a, t_b):
    """Zero cells of the hyperbolic Poisson hyperplane tessellation (Klein model)."""
    beta = (d + 1) / 2 if beta is None else beta
    cfg = _config("simulate zero-cell", {"d": d, "lambda": lam, "beta": beta}, reps, n_max, seed,
                  budget, out)
    _run_simulation(state, cfg, lambda s: sample_zero_cell(d, lam, beta, s, n_max),
                    _describe(t_a, t_b), out, off)


@simulate_group.command("voronoi")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@_sim_options
@click.pass_obj
@_guard
def simulate_voronoi(state, d, lam, reps, seed, n_max, budget, off, out, t_a, t_b):
    """Typical cells of the hyperbolic Poisson-Voronoi tessellation (Klein model)."""
    cfg = _config("simulate voronoi", {"d": d, "lambda": lam}, reps, n_max, seed, budget, out)
    _run_simulation(state, cfg, lambda s: sample_voronoi_typical_cell(d, lam, s, n_max),
                    _describe(t_a, t_b), out, off)


@simulate_group.command("poisson")
@click.option("--d", "d", type=int, required=True)
@click.option("--mu", type=float, required=True)
@click.option("--beta", type=float, required=True)
@_sim_options
@click.pass_obj
@_guard
def simulate_poisson(state, d, mu, beta, reps, seed, n_max, budget, off, out, t_a, t_b):
    """Euclidean Poisson polytopes (the alpha -> infinity limit)."""
    cfg = _config("simulate poisson", {"d": d, "mu": mu, "beta": beta}, reps, n_max, seed,
                  budget, out)
    _run_simulation(state, cfg, lambda s: sample_poisson_polytope(d, mu, beta, s, n_max),
                    _describe(t_a, t_b), out, off)


@simulate_group.command("covering")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--beta", type=float, default=None, help="Defaults to (d+1)/2.")
@click.option("--caps", type=int, default=10 ** 4, show_default=True)
@click.option("--grid", type=int, default=10 ** 5, show_default=True)
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=None)
@click.pass_obj
@_guard
def simulate_covering(state, d, lam, beta, caps, grid, reps, seed):
    """Sphere covering by the caps of the hyperplane process."""
    beta = (d + 1) / 2 if beta is None else beta
    cfg = _config("simulate covering", {"d": d, "lambda": lam, "beta": beta, "caps": caps}, reps,
                  1, seed, 0.0)
    results = harness.run_replicates(lambda s: cap_covering_experiment(d, lam, beta, caps, s, grid),
                                     reps, cfg.seed, state.threads)
    rows = [{"replicate": i, "covered": r.covered,
             "uncovered_direction_fraction": r.uncovered_direction_fraction}
            for i, r in enumerate(results)]
    lines = [json.dumps({"provenance": provenance(cfg)})] + [json.dumps(r) for r in rows]
    click.echo("\n".join(lines))


# ------------------------------------------------------------ verify ---

@main.group("verify")
def verify_group() -> None:
    """Monte Carlo against analytic values; exit 1 if any report fails."""


def _verify_options(fn):
    fn = click.option("--z-max", type=float, default=harness.Z_MAX, show_default=True)(fn)
    fn = click.option("--n-max", type=int, default=10 ** 6, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=None, help=f"Master seed (env {SEED_ENV}).")(fn)
    fn = click.option("--reps", type=int, default=2000, show_default=True)(fn)
    return fn


def _report_reports(state: _State, config: RunConfig, reports: list) -> None:
    payload = {"reports": [r.to_dict() for r in reports]}
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.statistic:<28} analytic={r.analytic:.8g} "
             f"mean={r.run.mean:.8g} stderr={r.run.stderr:.3g} z={r.z:+.3f} "
             f"failures={r.run.failures}" for r in reports]
    _emit(state, config, payload, lines)
    if not all(r.passed for r in reports):
        sys.exit(EXIT_VERIFY_FAILED)


@verify_group.command("f-vector")
@_params_options
@_verify_options
@click.pass_obj
@_guard
def verify_f_vector(state, d, beta, alpha, reps, seed, n_max, z_max):
    """beta* f-vector."""
    params = BetaStarParams(d, alpha, beta)
    cfg = _config("verify f-vector", params.as_dict(), reps, n_max, seed, 0.0)
    reports = harness.verify_f_vector(params, reps, cfg.seed, state.threads, n_max, z_max)
    _report_reports(state, cfg, reports)


@verify_group.command("zero-cell")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--beta", type=float, default=None)
@_verify_options
@click.pass_obj
@_guard
def verify_zero_cell(state, d, lam, beta, reps, seed, n_max, z_max):
    """Zero-cell f-vector."""
    beta = (d + 1) / 2 if beta is None else beta
    cfg = _config("verify zero-cell", {"d": d, "lambda": lam, "beta": beta}, reps, n_max, seed, 0.0)
    reports = harness.verify_zero_cell_f_vector(d, lam, beta, reps, cfg.seed, state.threads,
                                                n_max, z_max)
    _report_reports(state, cfg, reports)


@verify_group.command("voronoi")
@click.option("--d", "d", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@_verify_options
@click.pass_obj
@_guard
def verify_voronoi(state, d, lam, reps, seed, n_max, z_max):
    """Typical Voronoi cell f-vector."""
    cfg = _config("verify voronoi", {"d": d, "lambda": lam}, reps, n_max, seed, 0.0)
    reports = harness.verify_voronoi_f_vector(d, lam, reps, cfg.seed, state.threads, n_max, z_max)
    _report_reports(state, cfg, reports)


@verify_group.command("t")
@_params_options
@click.option("--a", "a", type=float, required=True)
@click.option("--b", "b", type=float, required=True)
@_verify_options
@click.pass_obj
@_guard
def verify_t(state, d, beta, alpha, a, b, reps, seed, n_max, z_max):
    """T-functional."""
    params = BetaStarParams(d, alpha, beta)
    cfg = _config("verify t", {**params.as_dict(), "a": a, "b": b}, reps, n_max, seed, 0.0)
    report = harness.verify_T(params, a, b, reps, cfg.seed, state.threads, n_max, z_max)
    _report_reports(state, cfg, [report])


@verify_group.command("intrinsic")
@_params_options
@click.option("--k", "k", type=int, required=True)
@_verify_options
@click.pass_obj
@_guard
def verify_intrinsic(state, d, beta, alpha, k, reps, seed, n_max, z_max):
    """Intrinsic volume V_k (k in {1, d-1, d})."""
    params = BetaStarParams(d, alpha, beta)
    cfg = _config("verify intrinsic", {**params.as_dict(), "k": k}, reps, n_max, seed, 0.0)
    report = harness.verify_intrinsic(params, k, reps, cfg.seed, state.threads, n_max, z_max=z_max)
    _report_reports(state, cfg, [report])


@verify_group.command("angles")
@_params_options
@click.option("--k", "k", type=int, required=True)
@click.option("--draws", type=int, default=10 ** 4, show_default=True,
              help="Gaussian draws per face for Monte Carlo angles.")
@_verify_options
@click.pass_obj
@_guard
def verify_angles(state, d, beta, alpha, k, draws, reps, seed, n_max, z_max):
    """External angle sums at k-faces."""
    params = BetaStarParams(d, alpha, beta)
    cfg = _config("verify angles", {**params.as_dict(), "k": k}, reps, n_max, seed, 0.0)
    report = harness.verify_external_angles(params, k, reps, cfg.seed, state.threads, draws,
                                            n_max, z_max)
    _report_reports(state, cfg, [report])


@verify_group.command("efron")
@click.option("--d", "d", type=int, required=True)
@click.option("--alpha", type=float, required=True)
@_verify_options
@click.pass_obj
@_guard
def verify_efron(state, d, alpha, reps, seed, n_max, z_max):
    """de Sitter angle against E f_0 / (2 alpha) at beta = (d+1)/2."""
    cfg = _config("verify efron", {"d": d, "alpha": alpha}, reps, n_max, seed, 0.0)
    report = harness.efron_de_sitter_check(d, alpha, reps, cfg.seed, state.threads, n_max,
                                           z_max=z_max)
    _report_reports(state, cfg, [report])


@verify_group.command("convergence")
@click.option("--d", "d", type=int, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--k", "k", type=int, default=0, show_default=True)
@click.option("--grid", type=str, required=True, help="Comma-separated geometric alpha grid.")
@click.option("--tol", type=float, default=0.1, show_default=True)
@click.pass_obj
@_guard
def verify_convergence(state, d, beta, k, grid, tol):
    """Log-log slope of f_k(alpha) - f_k(inf) against -2/(2 beta - d)."""
    try:
        alphas = [float(x) for x in grid.split(",")]
    except ValueError:
        raise ParameterError(f"cannot parse alpha grid {grid!r}")
    fit = harness.convergence_scan(d, beta, k, alphas)
    passed = abs(fit.slope - fit.expected_slope) <= tol
    cfg = RunConfig("verify convergence", {"d": d, "beta": beta, "k": k, "grid": alphas}, seed=0)
    _emit(state, cfg, {"slope": fit.slope, "expected_slope": fit.expected_slope, "passed": passed},
          [f"{'PASS' if passed else 'FAIL'}  slope={fit.slope:.4f} expected={fit.expected_slope:.4f}"])
    if not passed:
        sys.exit(EXIT_VERIFY_FAILED)


FIGURE_COLUMNS = ("d", "lambda", "alpha", "expected_f0", "euclidean_limit")
MC_COLUMNS = ("mean", "stderr", "z", "pass")


def figure_rows(preset: str) -> list[dict]:
    """Analytic rows of a figure preset."""
    rows = []
    for d in (2, 3, 4):
        if preset == "figure5":
            beta = (d + 1) / 2
            crit = analytic.lambda_crit(d)
            lambdas = np.geomspace(1.02 * crit, 20 * crit, FIGURE5_POINTS)
            limit = analytic.limit_f_vector(d, beta)[d - 1]
            for lam in lambdas:
                fv = analytic.expected_f_vector_zero_cell(d, float(lam), beta)
                rows.append({"d": d, "lambda": float(lam),
                             "alpha": analytic.alpha_for_zero_cell(d, float(lam), beta),
                             "expected_f0": fv[0], "euclidean_limit": limit})
        elif preset == "figure6":
            limit = analytic.limit_f_vector(d, float(d))[d - 1]
            for lam in FIGURE6_LAMBDAS:
                fv = analytic.expected_f_vector_voronoi(d, lam)
                rows.append({"d": d, "lambda": lam, "alpha": analytic.alpha_for_voronoi(d, lam),
                             "expected_f0": fv[0], "euclidean_limit": limit})
        else:
            raise ParameterError(f"unknown preset {preset!r}")
    return rows


@verify_group.command("sweep")
@click.option("--preset", type=click.Choice(["figure5", "figure6"]), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (stdout if omitted).")
@click.option("--reps", type=int, default=0, show_default=True,
              help="Monte Carlo replicates per row; 0 emits analytic columns only.")
@click.option("--seed", type=int, default=None)
@click.option("--n-max", type=int, default=10 ** 6, show_default=True)
@click.option("--z-max", type=float, default=harness.Z_MAX, show_default=True)
@click.pass_obj
@_guard
def verify_sweep(state, preset, out, reps, seed, n_max, z_max):
    """CSV data behind the expected-vertex-number figures."""
    cfg = _config(f"verify sweep {preset}", {"preset": preset}, max(reps, 1), n_max, seed, 0.0, out)
    rows = figure_rows(preset)
    columns = list(FIGURE_COLUMNS)
    all_pass = True
    if reps > 0:
        columns += MC_COLUMNS
        for i, row in enumerate(rows):
            d, lam = row["d"], row["lambda"]
            if preset == "figure5":
                sampler = lambda s: sample_zero_cell(d, lam, (d + 1) / 2, s, n_max)
            else:
                sampler = lambda s: sample_voronoi_typical_cell(d, lam, s, n_max)
            results = harness.run_replicates(sampler, reps, cfg.seed, state.threads,
                                             stream_offset=i * reps)
            polys = [r for r in results if not isinstance(r, NotTerminated)]
            run = harness.summarize("f0", {"d": d, "lambda": lam},
                                    [f_vector(p)[0] for p in polys], cfg.seed,
                                    len(results) - len(polys))
            rep = harness.compare(row["expected_f0"], run, z_max)
            row.update({"mean": run.mean, "stderr": run.stderr, "z": rep.z, "pass": rep.passed})
            all_pass &= rep.passed
    buf = io.StringIO()
    buf.write(f"# {json.dumps(provenance(cfg), default=_json_default)}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row[c] for c in columns})
    if out is None:
        click.echo(buf.getvalue(), nl=False)
    else:
        Path(out).write_text(buf.getvalue())
    if not all_pass:
        sys.exit(EXIT_VERIFY_FAILED)


if __name__ == "__main__":  # pragma: no cover
    main()
