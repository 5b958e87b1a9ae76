"""Monte Carlo estimates and analytic-vs-empirical verification reports."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import analytic
from .analytic import BetaStarParams, Phase
from .errors import InfiniteExpectation, ParameterError
from .geometry import (Polytope, external_angle_mc, f_vector, facet_volumes, t_functional,
                       volume, _all_faces)
from .sampling import (NotTerminated, RngStream, sample_beta_star_polytope, sample_voronoi_typical_cell,
                       sample_zero_cell, uniform_directions)
from .specfun import ball_volume, c_tilde, sphere_surface

__all__ = [
    "Z_MAX",
    "SampleRun",
    "VerificationReport",
    "run_replicates",
    "summarize",
    "verify_f_vector",
    "verify_zero_cell_f_vector",
    "verify_voronoi_f_vector",
    "verify_T",
    "verify_intrinsic",
    "verify_external_angles",
    "efron_angle",
    "efron_de_sitter_check",
    "SlopeFit",
    "convergence_scan",
    "compare",
]

Z_MAX = 3.0
# Bonferroni budget: expected false alarms per report at |z| <= 3 is about 0.27 %.
FALSE_POSITIVE_RATE = 0.0027


@dataclass(frozen=True)
class SampleRun:
    """Mean and standard error of a statistic over independent replicates."""

    statistic: str
    params: dict
    replicates: int
    mean: float
    stderr: float
    seed: int
    failures: int = 0
    values: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self, with_values: bool = False) -> dict:
        out = asdict(self)
        if not with_values:
            out.pop("values")
        return out


@dataclass(frozen=True)
class VerificationReport:
    """Analytic value against a Monte Carlo run."""

    analytic: float
    run: SampleRun
    z: float
    passed: bool
    z_max: float = Z_MAX

    @property
    def statistic(self) -> str:
        return self.run.statistic

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "analytic": self.analytic, "z": self.z,
                "passed": self.passed, "z_max": self.z_max, "run": self.run.to_dict()}


def run_replicates(fn: Callable[[RngStream], Any], replicates: int, seed: int,
                   threads: int = 1, stream_offset: int = 0) -> list[Any]:
    """Evaluate ``fn`` on streams ``stream_offset + i``; results in index order."""
    if replicates < 1:
        raise ParameterError(f"need at least one replicate, got {replicates}")
    streams = [RngStream(seed, stream_offset + i) for i in range(replicates)]
    if threads <= 1:
        return [fn(s) for s in streams]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, streams))


def summarize(statistic: str, params: dict, values: Sequence[float], seed: int,
              failures: int = 0) -> SampleRun:
    """Sample mean and standard error; needs at least two values."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise ParameterError(f"stderr needs at least 2 replicates, got {arr.size}")
    return SampleRun(statistic, dict(params), int(arr.size), float(arr.mean()),
                     float(arr.std(ddof=1) / math.sqrt(arr.size)), seed, failures,
                     tuple(float(v) for v in arr))


def compare(analytic_value: float, run: SampleRun, z_max: float = Z_MAX) -> VerificationReport:
    """z-score of the empirical mean against the analytic value."""
    diff = run.mean - analytic_value
    if run.stderr > 0:
        z = diff / run.stderr
    else:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return VerificationReport(analytic_value, run, z, abs(diff) <= z_max * run.stderr)


def _polytopes(sampler: Callable[[RngStream], Polytope | NotTerminated], replicates: int,
               seed: int, threads: int, stream_offset: int = 0):
    results = run_replicates(sampler, replicates, seed, threads, stream_offset)
    polys = [r for r in results if not isinstance(r, NotTerminated)]
    return polys, len(results) - len(polys)


def _require_polytope_phase(params: BetaStarParams) -> None:
    if params.phase is not Phase.POLYTOPE_AS:
        raise ParameterError(f"parameters {params.as_dict()} are not in the polytope phase")


def _f_reports(name: str, params: dict, analytic_values: Sequence[float], polys, failures: int,
               seed: int, z_max: float) -> list[VerificationReport]:
    fvs = np.array([f_vector(p) for p in polys], dtype=float)
    reports = []
    for k, value in enumerate(analytic_values):
        run = summarize(f"{name}_f{k}", params, fvs[:, k] if fvs.size else [], seed, failures)
        reports.append(compare(value, run, z_max))
    return reports


def verify_f_vector(params: BetaStarParams, replicates: int, seed: int, threads: int = 1,
                    n_max: int = 10 ** 6, z_max: float = Z_MAX) -> list[VerificationReport]:
    """One report per k comparing the mean f_k of simulated beta* polytopes with theory."""
    if replicates < 2:
        raise ParameterError(f"stderr needs at least 2 replicates, got {replicates}")
    _require_polytope_phase(params)
    expected = analytic.expected_f_vector(params)
    polys, failures = _polytopes(lambda s: sample_beta_star_polytope(params, s, n_max),
                                 replicates, seed, threads)
    return _f_reports("beta_star", params.as_dict(), expected.values, polys, failures, seed, z_max)


def verify_zero_cell_f_vector(d: int, lambda_intensity: float, beta: float, replicates: int,
                              seed: int, threads: int = 1, n_max: int = 10 ** 6,
                              z_max: float = Z_MAX) -> list[VerificationReport]:
    """f-vector of the simulated zero cell against the reversed beta* formula."""
    if replicates < 2:
        raise ParameterError(f"stderr needs at least 2 replicates, got {replicates}")
    expected = analytic.expected_f_vector_zero_cell(d, lambda_intensity, beta)
    polys, failures = _polytopes(lambda s: sample_zero_cell(d, lambda_intensity, beta, s, n_max),
                                 replicates, seed, threads)
    params = {"d": d, "lambda": lambda_intensity, "beta": beta}
    return _f_reports("zero_cell", params, expected.values, polys, failures, seed, z_max)


def verify_voronoi_f_vector(d: int, lambda_intensity: float, replicates: int, seed: int,
                            threads: int = 1, n_max: int = 10 ** 6,
                            z_max: float = Z_MAX) -> list[VerificationReport]:
    """f-vector of the simulated typical Voronoi cell against theory."""
    if replicates < 2:
        raise ParameterError(f"stderr needs at least 2 replicates, got {replicates}")
    expected = analytic.expected_f_vector_voronoi(d, lambda_intensity)
    polys, failures = _polytopes(lambda s: sample_voronoi_typical_cell(d, lambda_intensity, s, n_max),
                                 replicates, seed, threads)
    params = {"d": d, "lambda": lambda_intensity}
    return _f_reports("voronoi", params, expected.values, polys, failures, seed, z_max)


def verify_T(params: BetaStarParams, a: float, b: float, replicates: int, seed: int,
             threads: int = 1, n_max: int = 10 ** 6, z_max: float = Z_MAX) -> VerificationReport:
    """Mean T-functional of simulated polytopes against the quadrature formula.

    Raises:
        InfiniteExpectation: before any simulation when the expectation is infinite.
    """
    expected = analytic.expected_T(params.d, params.alpha, params.beta, a, b)
    polys, failures = _polytopes(lambda s: sample_beta_star_polytope(params, s, n_max),
                                 replicates, seed, threads)
    values = [t_functional(p, a, b) for p in polys]
    run = summarize(f"T_{a:g}_{b:g}", params.as_dict(), values, seed, failures)
    return compare(expected, run, z_max)


def _intrinsic_volume(p: Polytope, k: int, rng: np.random.Generator, n_dirs: int) -> float:
    d = p.dim
    if k == d:
        return volume(p)
    if k == d - 1:
        return 0.5 * float(np.sum(facet_volumes(p)))
    if k == 1:
        # V_1 = d kappa_d / kappa_{d-1} * mean support function
        u = uniform_directions(n_dirs, d, rng)
        support = np.max(u @ p.vertices.T, axis=1)
        return d * ball_volume(d) / ball_volume(d - 1) * float(support.mean())
    raise ParameterError(f"intrinsic volume V_{k} is only estimated for k in {{1, d-1, d}}")


def verify_intrinsic(params: BetaStarParams, k: int, replicates: int, seed: int,
                     threads: int = 1, n_max: int = 10 ** 6, n_dirs: int = 2000,
                     z_max: float = Z_MAX) -> VerificationReport:
    """Mean intrinsic volume V_k of simulated polytopes against theory."""
    expected = analytic.expected_intrinsic_volume(params.d, params.alpha, params.beta, k)

    def one(stream: RngStream):
        gen = stream.generator()
        p = sample_beta_star_polytope(params, gen, n_max)
        if isinstance(p, NotTerminated):
            return p
        return _intrinsic_volume(p, k, gen, n_dirs)

    results = run_replicates(one, replicates, seed, threads)
    values = [r for r in results if not isinstance(r, NotTerminated)]
    run = summarize(f"V_{k}", params.as_dict(), values, seed, len(results) - len(values))
    return compare(expected, run, z_max)


def _angle_sum(p: Polytope, k: int, n: int, rng: np.random.Generator) -> float:
    d = p.dim
    if k == d - 1:
        return 0.5 * p.n_facets
    if k == 0 and d <= 2:
        return 1.0
    faces = _all_faces(p)[k]
    return float(sum(external_angle_mc(p, sorted(f), n, rng) for f in faces))


def verify_external_angles(params: BetaStarParams, k: int, replicates: int, seed: int,
                           threads: int = 1, n: int = 10 ** 4, n_max: int = 10 ** 6,
                           z_max: float = Z_MAX) -> VerificationReport:
    """Mean external angle sum at k-faces against the I* formula."""
    _require_polytope_phase(params)
    if not 0 <= k < params.d:
        raise ParameterError(f"need 0 <= k < d, got k={k}")
    lam = 2 * params.beta - params.d
    expected = analytic.ext_angle_sum(params.alpha, k + 1, 1.0 if math.isclose(lam, 1.0) else lam)

    def one(stream: RngStream):
        gen = stream.generator()
        p = sample_beta_star_polytope(params, gen, n_max)
        return p if isinstance(p, NotTerminated) else _angle_sum(p, k, n, gen)

    results = run_replicates(one, replicates, seed, threads)
    values = [r for r in results if not isinstance(r, NotTerminated)]
    run = summarize(f"ext_angle_sum_{k}", params.as_dict(), values, seed,
                    len(results) - len(values))
    return compare(expected, run, z_max)


# ---------------------------------------------------------- Efron ---

def _cosh_power_integral(n: int, v: np.ndarray) -> np.ndarray:
    return analytic._cosh_power_integral(n, v)


def efron_angle(p: Polytope, rng: np.random.Generator | None = None, n_dirs: int = 4096) -> float:
    """Half the mass of c (|v|^2-1)^(-(d+1)/2) outside p, with c = c_tilde(d, (d+1)/2).

    Along a ray leaving p at distance rho the outside mass is
    c omega_d int_0^{arccoth rho} cosh^{d-1}.  In d = 2 the direction
    average is integrated exactly edge by edge; otherwise the mass beyond
    the circumradius is exact and the remainder is averaged over random
    directions.
    """
    d = p.dim
    if not p.offsets.min() > 1:
        raise ParameterError("the de Sitter angle needs inradius > 1")
    const = c_tilde(d, (d + 1) / 2) * sphere_surface(d)
    if d == 2:
        # int over an edge at distance h of (rho^2-1)^(-1/2) dphi = asinh(sin(phi)/sqrt(h^2-1))
        total = 0.0
        for (i, j), n, h in zip(p.facets, p.normals, p.offsets):
            s = math.sqrt(h * h - 1.0)
            tangent = np.array([-n[1], n[0]])
            ends = [math.asinh(float(v @ tangent) / float(np.linalg.norm(v)) / s)
                    for v in (p.vertices[i], p.vertices[j])]
            total += abs(ends[0] - ends[1])
        return 0.5 * const * total / (2 * math.pi)
    if rng is None:
        raise ParameterError("d > 2 needs a random generator for the direction average")
    r_out = float(np.linalg.norm(p.vertices, axis=1).max())
    w_out = math.atanh(1.0 / r_out)
    tail = float(_cosh_power_integral(d - 1, np.array([w_out]))[0])
    u = uniform_directions(n_dirs, d, rng)
    with np.errstate(divide="ignore"):
        proj = u @ p.normals.T
        ratio = np.where(proj > 0, p.offsets / proj, np.inf)
    rho = ratio.min(axis=1)
    w = np.arctanh(1.0 / rho)
    inner = _cosh_power_integral(d - 1, w) - tail
    return 0.5 * const * (tail + float(inner.mean()))


def efron_de_sitter_check(d: int, alpha: float, replicates: int, seed: int, threads: int = 1,
                          n_max: int = 10 ** 6, n_dirs: int = 4096,
                          z_max: float = Z_MAX) -> VerificationReport:
    """Compare the mean de Sitter angle with E f_0 / (2 alpha) at beta = (d+1)/2.

    The two sides are estimated from disjoint random streams; the returned
    report carries the angle run and the z-score of the difference.
    """
    if not alpha > (d - 1) * math.pi:
        raise ParameterError(f"need alpha > (d-1)*pi = {(d - 1) * math.pi}, got alpha={alpha}")
    params = BetaStarParams(d, alpha, (d + 1) / 2)

    def angle(stream: RngStream):
        gen = stream.generator()
        p = sample_beta_star_polytope(params, gen, n_max)
        return p if isinstance(p, NotTerminated) else efron_angle(p, gen, n_dirs)

    def f0(stream: RngStream):
        p = sample_beta_star_polytope(params, stream, n_max)
        return p if isinstance(p, NotTerminated) else f_vector(p)[0] / (2 * alpha)

    a_res = run_replicates(angle, replicates, seed, threads, stream_offset=0)
    b_res = run_replicates(f0, replicates, seed, threads, stream_offset=replicates)
    a_vals = [r for r in a_res if not isinstance(r, NotTerminated)]
    b_vals = [r for r in b_res if not isinstance(r, NotTerminated)]
    run_a = summarize("efron_angle", params.as_dict(), a_vals, seed, replicates - len(a_vals))
    run_b = summarize("f0_over_2alpha", params.as_dict(), b_vals, seed, replicates - len(b_vals))
    se = math.hypot(run_a.stderr, run_b.stderr)
    z = (run_a.mean - run_b.mean) / se if se > 0 else 0.0
    return VerificationReport(run_b.mean, run_a, z, abs(z) <= z_max, z_max)


# ---------------------------------------------------- convergence ---

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    expected_slope: float
    alphas: tuple[float, ...]
    deviations: tuple[float, ...]


def convergence_scan(d: int, beta: float, k: int, alpha_grid: Sequence[float],
                     f: Callable[[float], float] | None = None,
                     limit: float | None = None) -> SlopeFit:
    """Log-log slope of |f_k(alpha) - f_k(inf)| over a geometric alpha grid.

    ``f`` and ``limit`` default to the expected f_k and its alpha -> inf limit.

    Raises:
        ParameterError: fewer than 4 points, a non-geometric grid, or a
            vanishing deviation (slope undefined).
    """
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.size < 4:
        raise ParameterError(f"need at least 4 grid points, got {grid.size}")
    ratios = grid[1:] / grid[:-1]
    if np.any(ratios <= 1) or not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise ParameterError("alpha grid must be geometric and increasing")
    if f is None:
        f = lambda a: analytic.expected_f_vector(BetaStarParams(d, float(a), beta))[k]
    if limit is None:
        limit = analytic.limit_f_vector(d, beta)[k]
    dev = np.array([abs(f(a) - limit) for a in grid])
    if not np.all(np.isfinite(dev)) or np.any(dev <= 1e-14 * max(abs(limit), 1.0)):
        raise ParameterError("deviation from the limit vanishes; slope undefined")
    slope, intercept = np.polyfit(np.log(grid), np.log(dev), 1)
    return SlopeFit(float(slope), float(intercept), -2.0 / (2 * beta - d),
                    tuple(grid.tolist()), tuple(dev.tolist()))
