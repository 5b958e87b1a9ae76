"""Reproducible samplers for beta* polytopes and related point processes.

Radii of the rotation-invariant Poisson processes are produced in
decreasing order by inverting the tail mass ``Psi`` at the arrival times of
a unit-rate process.  The perfect simulator feeds atoms outside-in to an
incremental hull and stops as soon as the inradius exceeds the next radius.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .analytic import BetaStarParams, alpha_for_voronoi, alpha_for_zero_cell
from .errors import BoundExceeded, ParameterError
from .geometry import IncrementalHull, Polytope, polar_dual
from .quadrature import integrate_semi_infinite
from .specfun import c_tilde, log_c_tilde, sphere_surface

__all__ = [
    "RngStream",
    "NotTerminated",
    "RadialSampler",
    "PoissonRadialSampler",
    "uniform_directions",
    "beta_star_radii",
    "sample_beta_star_atoms",
    "sample_beta_star_polytope",
    "sample_zero_cell",
    "sample_voronoi_typical_cell",
    "sample_poisson_polytope",
    "sample_beta_prime",
    "gnomonic",
    "stereographic",
    "poi_to_kl",
    "d_kl",
    "d_poi",
    "d_hyp",
    "de_sitter_involution",
    "VoronoiPointSample",
    "sample_hyperbolic_voronoi_points",
    "CoverageResult",
    "cap_covering_experiment",
    "fibonacci_directions",
    "w_radial_cdf",
]

DEFAULT_N_MAX = 10 ** 6
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_HYP_TOL = 1e-9


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream) pair naming an independent PCG64 stream."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= v < 2 ** 64):
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, k: int) -> "RngStream":
        """Stream ``k`` of a family derived from this one."""
        return RngStream(self.seed, (self.stream * 1_000_003 + k + 1) % 2 ** 64)


@dataclass(frozen=True)
class NotTerminated:
    """The perfect simulator hit its atom budget without stopping."""

    atoms: int
    n_max: int


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# ------------------------------------------------------- tail tables ---

class _TailTable:
    """Tabulated C(y) = int_y^inf g(t) dt with Newton inversion.

    Nodes are ``y0 + k*h``; segment integrals use 16-point Gauss-Legendre.
    The table grows lazily in both directions; ``y_floor`` bounds it below.
    """

    def __init__(self, g: Callable[[np.ndarray], np.ndarray], y0: float, h: float,
                 span: tuple[int, int], y_floor: float = -700.0):
        self.g = g
        self.y0 = y0
        self.h = h
        self.y_floor = y_floor
        self.lock = threading.RLock()
        lo, hi = span
        self.k_lo = lo
        self.k_hi = hi
        self.values = np.empty(0)
        top = self._semi(self._node(hi))
        vals = [top]
        for k in range(hi - 1, lo - 1, -1):
            vals.append(vals[-1] + self._segment(self._node(k), self._node(k + 1)))
        self.values = np.array(vals[::-1])

    def _node(self, k: int) -> float:
        return self.y0 + k * self.h

    def _semi(self, y: float) -> float:
        return integrate_semi_infinite(self.g, y, rel_tol=1e-13, abs_tol=0.0).value

    def _segment(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        x = mid[..., None] + half[..., None] * _GL_X
        return np.sum(self.g(x.reshape(-1)).reshape(x.shape) * _GL_W, axis=-1) * half

    def _push_down(self) -> None:
        k = self.k_lo - 1
        if self._node(k) < self.y_floor - 1e-12:
            raise BoundExceeded(f"tail table reached its floor y = {self.y_floor}")
        val = self.values[0] + float(self._segment(self._node(k), self._node(k + 1)))
        self.values = np.concatenate([[val], self.values])
        self.k_lo = k

    def _push_up(self) -> None:
        k = self.k_hi + 1
        self.values = np.concatenate([self.values, [self._semi(self._node(k))]])
        self.k_hi = k

    def cover(self, y_min: float, y_max: float) -> None:
        """Extend the table so that [y_min, y_max] lies inside it."""
        with self.lock:
            while self._node(self.k_lo) > y_min:
                self._push_down()
            while self._node(self.k_hi) < y_max:
                self._push_up()

    def ensure(self, t_max: float, t_min: float) -> None:
        """Extend the table so that every target in [t_min, t_max] is bracketed."""
        with self.lock:
            while t_max > self.values[0]:
                self._push_down()
            while 0 < t_min < self.values[-1]:
                self._push_up()

    def tail(self, y: np.ndarray) -> np.ndarray:
        """C(y), vectorised; y must lie inside the current table."""
        y = np.asarray(y, dtype=float)
        with self.lock:
            k = np.clip(np.ceil((y - self.y0) / self.h).astype(np.int64), self.k_lo, self.k_hi)
            right = self._node(0) + k * self.h
            return self.values[k - self.k_lo] + self._segment(y, right)

    def inverse(self, t: np.ndarray) -> np.ndarray:
        """Solve C(y) = t for each target t > 0."""
        t = np.asarray(t, dtype=float)
        if t.size == 0:
            return t.copy()
        with self.lock:
            return self._inverse(t)

    def _inverse(self, t: np.ndarray) -> np.ndarray:
        self.ensure(float(t.max()), float(t.min()))
        vals = self.values
        # values decrease with k: locate vals[j] >= t > vals[j+1]
        j = np.searchsorted(-vals, -t, side="right") - 1
        j = np.clip(j, 0, vals.size - 2)
        a = self.y0 + (j + self.k_lo) * self.h
        b = a + self.h
        va, vb = vals[j], vals[j + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(va > vb, np.log(va / t) / np.log(va / vb), 0.5)
        y = a + np.clip(frac, 0.0, 1.0) * self.h
        lo, hi = a.copy(), b.copy()
        for _ in range(60):
            f = self.tail(y) - t
            lo = np.where(f > 0, y, lo)
            hi = np.where(f <= 0, y, hi)
            step = f / self.g(y)
            y_new = y + step
            bad = ~((y_new > lo) & (y_new < hi)) | ~np.isfinite(y_new)
            y_new = np.where(bad, 0.5 * (lo + hi), y_new)
            done = np.abs(f) <= 1e-13 * t
            if np.all(done):
                break
            y = np.where(done, y, y_new)
        return y


@lru_cache(maxsize=64)
def _unit_table(d: int, beta: float) -> _TailTable:
    """Tail of the radial intensity at alpha = 1 in the variable y = log(R - 1)."""
    log_c = log_c_tilde(d, beta) + math.log(sphere_surface(d))

    def g(y):
        with np.errstate(over="ignore"):
            return np.exp(log_c + (d - 1) * np.logaddexp(0.0, y)
                          - beta * (y + np.logaddexp(math.log(2.0), y)) + y)

    return _TailTable(g, 0.0, 0.25, (-48, 48))


class RadialSampler:
    """Decreasing radii of the beta* process, all larger than 1.

    ``psi(R)`` is the expected number of atoms outside radius ``R``.
    """

    def __init__(self, d: int, alpha: float, beta: float):
        params = BetaStarParams(d, alpha, beta)
        self.d, self.alpha, self.beta = params.d, params.alpha, params.beta
        self._table = _unit_table(self.d, self.beta)

    def psi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r <= 1):
            raise ParameterError("psi needs R > 1")
        y = np.log(r - 1.0)
        self._table.cover(float(np.min(y)), float(np.max(y)))
        return self.alpha * self._table.tail(y)

    def radii_from_arrivals(self, gamma: np.ndarray) -> np.ndarray:
        """Radii at arrival times ``gamma`` of a unit-rate Poisson process."""
        y = self._table.inverse(np.asarray(gamma, dtype=float) / self.alpha)
        return 1.0 + np.exp(y)


class PoissonRadialSampler:
    """Decreasing radii of the process with intensity mu c_tilde |x|^(-2 beta)."""

    def __init__(self, d: int, mu: float, beta: float):
        if not beta > d / 2:
            raise ParameterError(f"need beta > d/2 = {d / 2}, got beta={beta}")
        if not mu > 0:
            raise ParameterError(f"need mu > 0, got mu={mu}")
        self.d, self.mu, self.beta = d, mu, beta
        self._k = mu * c_tilde(d, beta) * sphere_surface(d) / (2 * beta - d)

    def psi(self, r) -> np.ndarray:
        return self._k * np.asarray(r, dtype=float) ** (self.d - 2 * self.beta)

    def radii_from_arrivals(self, gamma: np.ndarray) -> np.ndarray:
        return (np.asarray(gamma, dtype=float) / self._k) ** (1.0 / (self.d - 2 * self.beta))


# ------------------------------------------------------- atoms ---

def uniform_directions(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


def fibonacci_directions(n: int, d: int) -> np.ndarray:
    """Deterministic near-uniform directions (Fibonacci lattice for d <= 3)."""
    if d == 2:
        phi = 2 * math.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        phi = math.pi * (1 + math.sqrt(5)) * i
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return uniform_directions(n, d, np.random.default_rng(0))


def beta_star_radii(params: BetaStarParams, n: int, rng) -> np.ndarray:
    """The n largest radii of the beta* process, decreasing."""
    gen = _as_generator(rng)
    gamma = np.cumsum(gen.standard_exponential(n))
    return RadialSampler(params.d, params.alpha, params.beta).radii_from_arrivals(gamma)


def sample_beta_star_atoms(params: BetaStarParams, r_lower: float, rng,
                           max_atoms: int = 10 ** 7) -> np.ndarray:
    """All atoms of the beta* process with norm > r_lower (r_lower > 1)."""
    if not r_lower > 1:
        raise ParameterError(f"need r_lower > 1, got {r_lower}")
    gen = _as_generator(rng)
    sampler = RadialSampler(params.d, params.alpha, params.beta)
    total = float(sampler.psi(np.array([r_lower]))[0])
    n = gen.poisson(total)
    if n > max_atoms:
        raise BoundExceeded(f"{n} atoms exceed max_atoms={max_atoms}")
    gamma = np.sort(gen.uniform(0.0, total, n))
    radii = sampler.radii_from_arrivals(gamma) if n else np.empty(0)
    return radii[:, None] * uniform_directions(n, params.d, gen)


def _perfect_hull(d: int, sampler, n_max: int, gen: np.random.Generator) -> Polytope | NotTerminated:
    hull = IncrementalHull(d)
    gamma = 0.0

    def arrivals(k):
        nonlocal gamma
        g = gamma + np.cumsum(gen.standard_exponential(k))
        gamma = float(g[-1])
        return g

    peek = sampler.radii_from_arrivals(arrivals(1))
    total = 0
    batch = 4 * (d + 1)
    while total < n_max:
        k = min(batch, n_max - total)
        radii = np.concatenate([peek, sampler.radii_from_arrivals(arrivals(k))])
        peek = radii[-1:]
        atoms = radii[:k, None] * uniform_directions(k, d, gen)
        hull.add(atoms)
        total += k
        if hull.ready and hull.min_offset() > peek[0]:
            # continuous input is in general position a.s.; merging could only
            # glue nearly coplanar facets into inconsistent faces
            return hull.polytope(merge=False)
        batch *= 2
    return NotTerminated(total, n_max)


def sample_beta_star_polytope(params: BetaStarParams, rng, n_max: int = DEFAULT_N_MAX
                              ) -> Polytope | NotTerminated:
    """Perfect simulation of the beta* polytope.

    Returns the hull of all infinitely many atoms, or :class:`NotTerminated`
    when ``n_max`` atoms did not suffice (expected in the non-polytope phase).
    """
    if n_max < params.d + 1:
        raise ParameterError(f"n_max must be at least d+1 = {params.d + 1}")
    sampler = RadialSampler(params.d, params.alpha, params.beta)
    return _perfect_hull(params.d, sampler, n_max, _as_generator(rng))


def sample_zero_cell(d: int, lambda_intensity: float, beta: float, rng,
                     n_max: int = DEFAULT_N_MAX) -> Polytope | NotTerminated:
    """Zero cell of the hyperbolic Poisson hyperplane tessellation, Klein model."""
    if not beta > max(d / 2, 1):
        raise ParameterError(f"need beta > max(d/2, 1), got beta={beta}")
    alpha = alpha_for_zero_cell(d, lambda_intensity, beta)
    out = sample_beta_star_polytope(BetaStarParams(d, alpha, beta), rng, n_max)
    return out if isinstance(out, NotTerminated) else polar_dual(out)


def sample_voronoi_typical_cell(d: int, lambda_intensity: float, rng,
                                n_max: int = DEFAULT_N_MAX) -> Polytope | NotTerminated:
    """Typical cell of the hyperbolic Poisson-Voronoi tessellation, Klein model."""
    alpha = alpha_for_voronoi(d, lambda_intensity)
    out = sample_beta_star_polytope(BetaStarParams(d, alpha, float(d)), rng, n_max)
    return out if isinstance(out, NotTerminated) else polar_dual(out)


def sample_poisson_polytope(d: int, mu: float, beta: float, rng,
                            n_max: int = DEFAULT_N_MAX) -> Polytope | NotTerminated:
    """Perfect simulation of the hull of the Poisson process mu c_tilde |x|^(-2 beta)."""
    sampler = PoissonRadialSampler(d, mu, beta)
    return _perfect_hull(d, sampler, n_max, _as_generator(rng))


def sample_beta_prime(dim: int, beta: float, n: int, rng) -> np.ndarray:
    """n i.i.d. points with density c_tilde (1 + |x|^2)^(-beta) on R^dim."""
    from scipy.special import betaincinv

    if not beta > dim / 2:
        raise ParameterError(f"need beta > dim/2 = {dim / 2}, got beta={beta}")
    gen = _as_generator(rng)
    a, b = dim / 2, beta - dim / 2
    u = gen.uniform(size=n)
    x = np.empty(n)
    y = np.empty(n)
    low = u < 0.5
    x[low] = betaincinv(a, b, u[low])
    y[low] = 1.0 - x[low]
    y[~low] = betaincinv(b, a, 1.0 - u[~low])
    x[~low] = 1.0 - y[~low]
    r = np.sqrt(x / y)
    return r[:, None] * uniform_directions(n, dim, gen)


# ---------------------------------------------------- hyperbolic maps ---

def _check_hyperboloid(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    b = x[:, 0] ** 2 - np.sum(x[:, 1:] ** 2, axis=1)
    if np.any(np.abs(b - 1.0) > _HYP_TOL * np.maximum(1.0, x[:, 0] ** 2)) or np.any(x[:, 0] <= 0):
        raise ParameterError("point is not on the upper hyperboloid sheet")
    return x


def _check_ball(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(np.linalg.norm(np.atleast_2d(v), axis=1) >= 1):
        raise ParameterError("point is not in the open unit ball")
    return v


def _squeeze(out: np.ndarray, like) -> np.ndarray:
    return out[0] if np.ndim(like) == 1 else out


def gnomonic(x) -> np.ndarray:
    """Hyperboloid point (x0, x') to the Klein ball point x'/x0."""
    arr = _check_hyperboloid(x)
    return _squeeze(arr[:, 1:] / arr[:, :1], x)


def stereographic(x) -> np.ndarray:
    """Hyperboloid point (x0, x') to the Poincare ball point x'/(1 + x0)."""
    arr = _check_hyperboloid(x)
    return _squeeze(arr[:, 1:] / (1.0 + arr[:, :1]), x)


def poi_to_kl(w) -> np.ndarray:
    """Poincare ball to Klein ball: w -> 2w/(1 + |w|^2)."""
    w = _check_ball(w)
    sq = np.sum(np.atleast_2d(w) ** 2, axis=1)
    out = 2.0 * np.atleast_2d(w) / (1.0 + sq)[:, None]
    return _squeeze(out, w)


def d_kl(v) -> np.ndarray:
    """Hyperbolic distance from 0 to a Klein point."""
    v = _check_ball(v)
    return np.arctanh(np.linalg.norm(v, axis=-1))


def d_poi(w) -> np.ndarray:
    """Hyperbolic distance from 0 to a Poincare point."""
    w = _check_ball(w)
    return 2.0 * np.arctanh(np.linalg.norm(w, axis=-1))


def d_hyp(x, y) -> np.ndarray:
    """Distance arccosh B(x, y) between hyperboloid points."""
    a, b = _check_hyperboloid(x), _check_hyperboloid(y)
    form = a[:, 0] * b[:, 0] - np.sum(a[:, 1:] * b[:, 1:], axis=1)
    out = np.arccosh(np.maximum(form, 1.0))
    return out[0] if np.ndim(x) == 1 and np.ndim(y) == 1 else out


def de_sitter_involution(v) -> np.ndarray:
    """v -> v / sqrt(|v|^2 - 1) on |v| > 1; an involution."""
    v = np.asarray(v, dtype=float)
    sq = np.sum(np.atleast_2d(v) ** 2, axis=1)
    if np.any(sq <= 1):
        raise ParameterError("de Sitter involution needs |v| > 1")
    out = np.atleast_2d(v) / np.sqrt(sq - 1.0)[:, None]
    return _squeeze(out, v)


# ------------------------------------------------- Voronoi points ---

@dataclass(frozen=True)
class VoronoiPointSample:
    """Poincare-model points of the W process inside radius r_min."""

    points: np.ndarray
    expected_count: float
    r_min: float


@lru_cache(maxsize=64)
def _w_table(d: int, beta: float, z_min: float) -> _TailTable:
    """Radial mass of W at unit lambda in z = -log r, from z_min upwards."""
    log_k = d * math.log(2.0) + math.log(sphere_surface(d))

    def g(z):
        with np.errstate(over="ignore", divide="ignore"):
            r2 = np.exp(-2.0 * z)
            return np.exp(log_k - (2 * beta - d) * z - beta * np.log1p(-r2))

    return _TailTable(g, z_min, 0.125, (0, 160), y_floor=z_min)


def sample_hyperbolic_voronoi_points(d: int, lambda_intensity: float, beta: float,
                                     r_min: float, rng) -> VoronoiPointSample:
    """Points W with intensity 2^d lambda |w|^(2beta-2d) (1-|w|^2)^(-beta), |w| <= r_min.

    The process has infinitely many points near the unit sphere; only the
    part inside radius ``r_min`` is sampled, which is empty as r_min -> 0.
    """
    if not beta > max(d / 2, 1):
        raise ParameterError(f"need beta > max(d/2, 1), got beta={beta}")
    if not lambda_intensity > 0:
        raise ParameterError(f"need lambda > 0, got {lambda_intensity}")
    if not 0 <= r_min < 1:
        raise ParameterError(f"need 0 <= r_min < 1, got r_min={r_min}")
    gen = _as_generator(rng)
    if r_min == 0:
        return VoronoiPointSample(np.empty((0, d)), 0.0, r_min)
    table = _w_table(d, float(beta), -math.log(r_min))
    mass = float(table.values[0])
    total = lambda_intensity * mass
    n = gen.poisson(total)
    t = np.sort(gen.uniform(0.0, mass, n))
    z = table.inverse(t) if n else np.empty(0)
    radii = np.exp(-z)
    pts = radii[:, None] * uniform_directions(n, d, gen)
    return VoronoiPointSample(pts, total, r_min)


def w_radial_cdf(d: int, beta: float, r_min: float, r) -> np.ndarray:
    """CDF of |W| conditionally on |W| <= r_min."""
    table = _w_table(d, float(beta), -math.log(r_min))
    z = -np.log(np.asarray(r, dtype=float))
    table.cover(float(np.min(z)), float(np.max(z)))
    return table.tail(z) / table.values[0]


# ------------------------------------------------------ covering ---

@dataclass(frozen=True)
class CoverageResult:
    covered: bool
    uncovered_direction_fraction: float
    n_caps: int


def _arc_uncovered_fraction(theta: np.ndarray, half: np.ndarray) -> float:
    """Exact uncovered fraction of the circle by arcs (centre, half-width)."""
    two_pi = 2 * math.pi
    if theta.size == 0:
        return 1.0
    if np.any(half >= math.pi):
        return 0.0
    start = np.mod(theta - half, two_pi)
    order = np.argsort(start)
    start, end = start[order], start[order] + 2 * half[order]
    merged: list[list[float]] = []
    for s0, e0 in zip(start, end):
        if merged and s0 <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e0)
        else:
            merged.append([s0, e0])
    covered = sum(e0 - s0 for s0, e0 in merged)
    # parts beyond 2*pi wrap onto [0, ...) and may overlap earlier intervals
    for s0, e0 in merged:
        lo, hi = max(s0, two_pi) - two_pi, e0 - two_pi
        if hi <= 0:
            continue
        for a0, b0 in merged:
            if a0 >= two_pi:
                break
            covered -= max(0.0, min(hi, min(b0, two_pi)) - max(lo, a0))
    return max(0.0, 1.0 - covered / two_pi)


def cap_covering_experiment(d: int, lambda_intensity: float, beta: float, n_caps: int, rng,
                            grid_size: int = 10 ** 5) -> CoverageResult:
    """Cover the sphere by the caps {u : <u, u_n> > r_n} of the first n_caps hyperplanes.

    The distances r_n are the reciprocal radii of the beta* process with
    alpha = lambda / (c_tilde omega).  In d = 2 the covered measure is
    computed exactly from the arc union; otherwise a direction grid is used.
    """
    if d < 2:
        raise ParameterError(f"covering needs d >= 2, got {d}")
    if n_caps < 0:
        raise ParameterError("n_caps must be non-negative")
    if n_caps == 0:
        return CoverageResult(False, 1.0, 0)
    gen = _as_generator(rng)
    alpha = alpha_for_zero_cell(d, lambda_intensity, beta)
    radii = beta_star_radii(BetaStarParams(d, alpha, beta), n_caps, gen)
    dist = 1.0 / radii
    centres = uniform_directions(n_caps, d, gen)
    if d == 2:
        theta = np.arctan2(centres[:, 1], centres[:, 0])
        frac = _arc_uncovered_fraction(theta, np.arccos(dist))
        return CoverageResult(frac == 0.0, frac, n_caps)
    grid = fibonacci_directions(grid_size, d)
    alive = np.arange(grid.shape[0])
    for s in range(0, n_caps, 256):
        if alive.size == 0:
            break
        dots = grid[alive] @ centres[s:s + 256].T
        hit = np.any(dots > dist[s:s + 256], axis=1)
        alive = alive[~hit]
    frac = alive.size / grid.shape[0]
    return CoverageResult(frac == 0.0, frac, n_caps)
