"""Closed-form and quadrature expectations for beta* polytopes.

Conventions: ``d`` is the dimension, ``alpha`` the intensity factor and
``beta`` the shape of the beta* intensity
``alpha * c_tilde(d, beta) * (|x|^2 - 1)^(-beta)`` on ``|x| > 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import specfun
from .errors import InfiniteExpectation, ParameterError
from .quadrature import PathSegment, integrate, integrate_path, integrate_semi_infinite
from .specfun import a_coeff, c_tilde, log_c_tilde, sphere_surface

__all__ = [
    "Phase",
    "Route",
    "BetaStarParams",
    "ExpectedFVector",
    "alpha_crit",
    "lambda_crit",
    "alpha_for_zero_cell",
    "alpha_for_voronoi",
    "phase_classify",
    "i_star",
    "ext_angle_sum",
    "ext_angle_sum_lambda1",
    "ext_angle_sum_lambda2",
    "j_tilde_sum",
    "j_tilde_sum_half",
    "j_tilde_sum_bessel",
    "expected_f_vector",
    "expected_f_vector_zero_cell",
    "expected_f_vector_voronoi",
    "limit_f_vector",
    "non_absorption_p",
    "s_const",
    "expected_T",
    "expected_intrinsic_volume",
    "i_star_infinity",
    "i_star_correction",
    "monotonicity_scan",
]

_EQ_TOL = 1e-12
ROUTE_AGREEMENT_TOL = 1e-6
_LOG2 = math.log(2.0)


def _close(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=_EQ_TOL, abs_tol=_EQ_TOL)


def _comb(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


class Phase(str, Enum):
    POLYTOPE_AS = "PolytopeAS"
    NOT_POLYTOPE_WITH_POSITIVE_PROB = "NotPolytopeWithPositiveProb"
    DOUBLY_CRITICAL_OPEN = "DoublyCriticalOpen"
    DOUBLY_CRITICAL_POLYGON_AS = "DoublyCriticalPolygonAS"


class Route(str, Enum):
    GENERAL_QUADRATURE = "GeneralQuadrature"
    CLOSED_FORM_HALF = "ClosedFormHalf"
    CLOSED_FORM_BESSEL = "ClosedFormBessel"


@dataclass(frozen=True)
class BetaStarParams:
    """Validated parameter triple of a beta* process."""

    d: int
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ParameterError(f"dimension must be an integer d >= 1, got {self.d!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"need alpha > 0, got alpha={self.alpha}")
        if not (math.isfinite(self.beta) and self.beta > self.d / 2):
            raise ParameterError(f"need beta > d/2 = {self.d / 2}, got beta={self.beta}")

    @property
    def lam(self) -> float:
        """The exponent 2*beta - d."""
        return 2.0 * self.beta - self.d

    @property
    def phase(self) -> Phase:
        return phase_classify(self)

    def as_dict(self) -> dict:
        return {"d": int(self.d), "alpha": float(self.alpha), "beta": float(self.beta)}


@dataclass(frozen=True)
class ExpectedFVector:
    """Expected face numbers; ``values[k]`` is E f_k."""

    values: tuple[float, ...]
    route: Route
    route_deviation: float | None = None

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def euler_sum(self) -> float:
        return sum((-1) ** k * v for k, v in enumerate(self.values))

    def reversed(self) -> "ExpectedFVector":
        return ExpectedFVector(self.values[::-1], self.route, self.route_deviation)


# ---------------------------------------------------------------- phases ---

def alpha_crit(d: int) -> float:
    """Critical intensity (d-1)*pi at beta = (d+1)/2."""
    return (d - 1) * math.pi


def lambda_crit(d: int) -> float:
    """Critical hyperplane intensity of the isometry-invariant tessellation."""
    if d < 2:
        raise ParameterError(f"lambda_crit needs d >= 2, got {d}")
    return (d - 1) ** 2 * math.sqrt(math.pi) * math.gamma((d - 1) / 2) / math.gamma(d / 2)


def alpha_for_zero_cell(d: int, lambda_intensity: float, beta: float) -> float:
    """alpha of the beta* polytope whose polar is the zero cell."""
    if not lambda_intensity > 0:
        raise ParameterError(f"need lambda > 0, got {lambda_intensity}")
    return lambda_intensity / (c_tilde(d, beta) * sphere_surface(d))


def alpha_for_voronoi(d: int, lambda_intensity: float, beta: float | None = None) -> float:
    """alpha of the beta* polytope dual to the (generalised) typical Voronoi cell."""
    if not lambda_intensity > 0:
        raise ParameterError(f"need lambda > 0, got {lambda_intensity}")
    beta = d if beta is None else beta
    return 2.0 ** d * lambda_intensity / c_tilde(d, beta)


def phase_classify(params: BetaStarParams) -> Phase:
    """Phase of the beta* set: polytope a.s., or not, or doubly critical."""
    d, alpha, beta = params.d, params.alpha, params.beta
    if d == 1:
        if beta > 1:
            return Phase.POLYTOPE_AS
        raise ParameterError(f"phase diagram for d = 1 needs beta > 1, got {beta}")
    half = (d + 1) / 2
    if _close(beta, half):
        crit = alpha_crit(d)
        if _close(alpha, crit):
            return Phase.DOUBLY_CRITICAL_POLYGON_AS if d == 2 else Phase.DOUBLY_CRITICAL_OPEN
        return Phase.POLYTOPE_AS if alpha > crit else Phase.NOT_POLYTOPE_WITH_POSITIVE_PROB
    if beta > half:
        return Phase.POLYTOPE_AS
    return Phase.NOT_POLYTOPE_WITH_POSITIVE_PROB


# ------------------------------------------------------- 1-D kernels ---

def _log_sinh(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    small = np.minimum(w, 20.0)
    return np.where(w > 20.0, w - _LOG2 + np.log1p(-np.exp(-2.0 * np.maximum(w, 20.0))),
                    np.log(np.sinh(small)))


def _log_cosh(v: np.ndarray) -> np.ndarray:
    v = np.abs(np.asarray(v, dtype=float))
    return v - _LOG2 + np.log1p(np.exp(-2.0 * v))


def _is_int(x: float) -> bool:
    return abs(x - round(x)) < 1e-12


def _sinh_power_integral(n: float, w: np.ndarray) -> np.ndarray:
    """int_0^w sinh(t)^n dt for n > -1, vectorised in w."""
    w = np.asarray(w, dtype=float)
    if _is_int(n):
        n = int(round(n))
        with np.errstate(over="ignore", invalid="ignore"):
            prev2 = w.copy()                      # S_0
            prev1 = 2.0 * np.sinh(0.5 * w) ** 2   # S_1
            if n == 0:
                out = prev2
            elif n == 1:
                out = prev1
            else:
                sh, ch = np.sinh(w), np.cosh(w)
                s = [prev2, prev1]
                for j in range(2, n + 1):
                    s.append(sh ** (j - 1) * ch / j - (j - 1) / j * s[j - 2])
                out = s[n]
            if n >= 1:
                big = w > 25.0
                if np.any(big):
                    out = np.where(big, np.exp(n * np.minimum(w, 700.0) - n * _LOG2 - math.log(n)), out)
        return out
    if not n > -1:
        raise ParameterError(f"sinh power integral needs exponent > -1, got {n}")
    power = 2.0 if n >= 0 else 2.0 / (n + 1.0)
    w_cap = 40.0 / (-n) + 5.0 if n < 0 else math.inf
    out = np.empty_like(w)
    for i, wi in enumerate(w.ravel()):
        if wi <= 0:
            out.flat[i] = 0.0
        elif n > 0 and n * wi > 700.0:
            out.flat[i] = math.inf
        else:
            upper = min(wi, _SINH_SPLIT) if n > 0 else min(wi, w_cap)
            val = integrate(lambda t: np.sinh(t) ** n, 0.0, upper, rel_tol=1e-13,
                            abs_tol=0.0, singular="left", power=power).value
            if n > 0 and wi > _SINH_SPLIT:
                # sinh^n = e^{nt} 2^{-n} (1 + O(e^{-2t})) beyond the split
                val += (math.exp(n * wi) - math.exp(n * _SINH_SPLIT)) / (n * 2.0 ** n)
            out.flat[i] = val
    return out


_SINH_SPLIT = 30.0


def _cosh_power_integral(n: float, v: np.ndarray) -> np.ndarray:
    """int_0^v cosh(u)^n du, vectorised in v."""
    v = np.asarray(v, dtype=float)
    if _is_int(n) and n >= 0:
        n = int(round(n))
        with np.errstate(over="ignore", invalid="ignore"):
            sh, ch = np.sinh(v), np.cosh(v)
            c = [v.copy(), sh]
            for j in range(2, n + 1):
                c.append(sh * ch ** (j - 1) / j + (j - 1) / j * c[j - 2])
        return c[n]
    out = np.empty_like(v)
    v_cap = 40.0 / (-n) + 5.0 if n < 0 else math.inf
    for i, vi in enumerate(v.ravel()):
        if vi <= 0:
            out.flat[i] = 0.0
        elif n > 0 and n * vi > 700.0:
            out.flat[i] = math.inf
        else:
            top = min(vi, _SINH_SPLIT) if n > 0 else min(vi, v_cap)
            val = integrate(lambda t: np.cosh(t) ** n, 0.0, top,
                            rel_tol=1e-13, abs_tol=0.0).value
            if n > 0 and vi > _SINH_SPLIT:
                val += (math.exp(n * vi) - math.exp(n * _SINH_SPLIT)) / (n * 2.0 ** n)
            out.flat[i] = val
    return out


def _tail_exponent(lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """w -> c_tilde(1,(lam+1)/2) * int_{coth w}^inf (t^2-1)^{-(lam+1)/2} dt.

    With t = coth(theta) this is c_tilde(1,(lam+1)/2) * int_0^w sinh^{lam-1}.
    """
    c = c_tilde(1, (lam + 1) / 2)
    return lambda w: c * _sinh_power_integral(lam - 1.0, w)


def _direct_tail(lam: float, u: float) -> float:
    """Same tail as :func:`_tail_exponent` in the original variable, y = 1 + u."""
    c = c_tilde(1, (lam + 1) / 2)
    e = -(lam + 1) / 2

    # x = u e^s turns the long 1/x plateau into a smooth exponential tail
    log_u = math.log(u)

    def f(s):
        log_x = log_u + s
        return np.exp(log_x + e * (log_x + np.logaddexp(0.0, log_x - _LOG2) + _LOG2))

    scale = max(1.0, math.log(2.0 / u)) if u < 2.0 else 1.0
    return c * integrate_semi_infinite(f, 0.0, rel_tol=1e-11, abs_tol=0.0, scale=scale).value


# ----------------------------------------------------- external angles ---

def _check_i_star(alpha: float, m: int, lam: float) -> None:
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if not alpha > 0:
        raise ParameterError(f"need alpha > 0, got {alpha}")
    if _close(lam, 1.0):
        if not alpha > (m - 1) * math.pi:
            raise InfiniteExpectation(
                f"lambda = 1 needs alpha > (m-1)*pi = {(m - 1) * math.pi}, got alpha={alpha}")
    elif not lam > 1:
        raise ParameterError(f"need lambda >= 1, got lambda={lam}")


@lru_cache(maxsize=4096)
def i_star(alpha: float, m: int, lam: float, method: str = "coth") -> float:
    """The double integral I*_{alpha,m}(lambda).

    ``method="coth"`` (default) integrates the coth-substituted form,
    ``method="direct"`` the original y-form with a nested tail integral
    (slow, for cross-checks).
    """
    _check_i_star(alpha, m, lam)
    log_c = log_c_tilde(1, (lam * m + 1) / 2)
    if method == "direct":
        def direct(u):
            out = np.empty_like(u)
            for i, ui in enumerate(u):
                if ui <= 0 or not math.isfinite(ui):
                    out[i] = 0.0
                    continue
                tail = _direct_tail(lam, float(ui))
                out[i] = math.exp(log_c - (lam * m + 1) / 2 * math.log(ui * (2.0 + ui)) - alpha * tail)
            return out

        return integrate_semi_infinite(direct, 0.0, rel_tol=1e-9, abs_tol=0.0,
                                       singular_left=True, max_intervals=40000).value
    if method != "coth":
        raise ValueError(f"unknown method {method!r}")
    tail = _tail_exponent(lam)
    expo = lam * m - 1.0

    def integrand(w):
        with np.errstate(over="ignore", invalid="ignore"):
            log_val = log_c + expo * _log_sinh(w) - alpha * tail(w)
        return np.exp(np.where(np.isnan(log_val), -np.inf, log_val))

    c1 = c_tilde(1, (lam + 1) / 2)
    scale = min(1.0, max(1e-3, (lam / (c1 * alpha)) ** (1.0 / lam)))
    return integrate_semi_infinite(integrand, 0.0, rel_tol=1e-12, abs_tol=0.0,
                                   singular_left=not _is_int(expo), scale=scale).value


def ext_angle_sum(alpha: float, m: int, lam: float, method: str = "coth") -> float:
    """Expected external angle sum (alpha^m / m!) * I*_{alpha,m}(lambda)."""
    value = i_star(float(alpha), int(m), float(lam), method)
    return math.exp(m * math.log(alpha) - math.lgamma(m + 1)) * value


def ext_angle_sum_lambda1(alpha: float, m: int) -> float:
    """Gamma-ratio closed form of the external angle sum at lambda = 1."""
    if not alpha > (m - 1) * math.pi:
        raise InfiniteExpectation(f"lambda = 1 needs alpha > (m-1)*pi = {(m - 1) * math.pi}")
    y = alpha / (2 * math.pi)
    log_val = (m * math.log(alpha) + math.lgamma((m + 1) / 2) - math.log(m) - m * _LOG2
               - 0.5 * math.log(math.pi) - math.lgamma(m / 2)
               + math.lgamma(y - (m - 1) / 2) - math.lgamma(y + (m + 1) / 2))
    return math.exp(log_val)


def ext_angle_sum_lambda2(alpha: float, m: int) -> float:
    """Bessel closed form of the external angle sum at lambda = 2."""
    if not alpha > 0:
        raise ParameterError(f"need alpha > 0, got {alpha}")
    scaled = specfun.bessel_k_scaled(m - 0.5, alpha / 2)
    return math.sqrt(alpha / math.pi) * math.comb(2 * m - 1, m) * scaled


# ----------------------------------------------------- internal angles ---

def _check_j(m: int, l: int, beta: float) -> float:
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if not (isinstance(l, (int, np.integer)) and l >= 1):
        raise ParameterError(f"l must be a positive integer, got {l!r}")
    lam = 2.0 * beta - m + 1.0
    if not beta > (m - 1) / 2:
        raise ParameterError(f"need beta > (m-1)/2 = {(m - 1) / 2}, got beta={beta}")
    if not lam * m > 1:
        raise ParameterError(f"need lambda*m > 1 with lambda = 2*beta-m+1 = {lam}")
    return lam


@lru_cache(maxsize=4096)
def j_tilde_sum(m: int, l: int, beta: float, method: str = "gudermannian") -> float:
    """Expected internal angle sum of a beta' simplex at its (l-1)-faces.

    The outer angle phi and the vertical leg of the inner path are both
    parametrised by the Gudermannian, tan(phi) = sinh(v), which turns the
    endpoint singularity at pi/2 into an exponentially decaying tail.
    ``method="path"`` evaluates the literal phi-integral with the inner
    complex path integral (slow, for cross-checks).
    """
    if l > m:
        return 0.0
    if l == m:
        return 1.0
    lam = _check_j(m, l, beta)
    p = m - l
    log_out = log_c_tilde(1, lam * m / 2)
    c_in = c_tilde(1, (lam + 1) / 2)
    if method == "path":
        def inner(phi: float) -> complex:
            segs = [PathSegment(complex(-math.inf, 0.0), 0j), PathSegment(0j, 1j * phi)]
            with np.errstate(over="ignore"):
                return integrate_path(lambda z: c_in / np.cosh(z) ** lam, segs,
                                      rel_tol=1e-11, abs_tol=0.0).value

        def outer(phi):
            out = np.empty_like(phi)
            for i, ph in enumerate(phi):
                out[i] = math.exp(log_out) * math.cos(ph) ** (lam * m - 2) * (inner(ph) ** p).real
            return out

        value = integrate(outer, 0.0, math.pi / 2, rel_tol=1e-9, abs_tol=0.0, singular="right").value
        return 2.0 * math.comb(m, l) * value
    if method != "gudermannian":
        raise ValueError(f"unknown method {method!r}")

    def integrand(v):
        g = c_in * _cosh_power_integral(lam - 1.0, v)
        with np.errstate(over="ignore", invalid="ignore"):
            log_mod = 0.5 * np.log(0.25 + g * g)
            arg = np.arctan2(g, 0.5)
            log_val = log_out + (1.0 - lam * m) * _log_cosh(v) + p * log_mod
            val = np.exp(log_val) * np.cos(p * arg)
        return np.where(np.isfinite(val), val, 0.0)

    decay = lam * m - 1.0 - max(lam - 1.0, 0.0) * p
    scale = min(1.0, 1.0 / max(decay, 1e-3))
    value = integrate_semi_infinite(integrand, 0.0, rel_tol=1e-12, abs_tol=1e-15, scale=scale).value
    return 2.0 * math.comb(m, l) * value


def j_tilde_sum_bessel(m: int, l: int) -> float:
    """Closed form of the internal angle sum at beta = (m+1)/2."""
    if l > m:
        return 0.0
    num = _comb(m, l) * _comb(m + l, l) - _comb(m - 2, l) * _comb(m + l - 2, l)
    return num / math.comb(2 * m, m)


def j_tilde_sum_half(m: int, l: int) -> float:
    """Closed form of the internal angle sum at beta = m/2 via A[n,k]."""
    if l > m:
        return 0.0
    if l == m:
        return 1.0
    diff = a_coeff(m, l) - a_coeff(m - 2, l)
    return math.pi ** (l - m) / math.factorial(l) * m * diff / (2.0 * c_tilde(1, (m + 1) / 2))


# --------------------------------------------------------- f-vectors ---

def _check_f_vector(params: BetaStarParams) -> None:
    d, alpha, beta = params.d, params.alpha, params.beta
    half = (d + 1) / 2
    if _close(beta, half):
        if not alpha > alpha_crit(d):
            raise InfiniteExpectation(
                f"beta = (d+1)/2 needs alpha > (d-1)*pi = {alpha_crit(d)}, got alpha={alpha}")
    elif beta < half:
        raise ParameterError(
            f"expected f-vector needs beta >= (d+1)/2 = {half}, got beta={beta}")


def _general_route(params: BetaStarParams) -> tuple[float, ...]:
    d, alpha, beta = params.d, params.alpha, params.beta
    lam = 2.0 * beta - d
    if _close(beta, (d + 1) / 2):
        lam = 1.0
    out = []
    for k in range(d):
        total = 0.0
        for s in range((d - k - 1) // 2 + 1):
            m = d - 2 * s
            total += ext_angle_sum(alpha, m, lam) * j_tilde_sum(m, k + 1, beta - s - 0.5)
        out.append(2.0 * total)
    return tuple(out)


def _half_route(params: BetaStarParams) -> tuple[float, ...]:
    d, alpha = params.d, params.alpha
    y = alpha / (2 * math.pi)
    out = []
    for l in range(1, d + 1):
        total = 0.0
        for m in range(l, d + 1):
            if (m - d) % 2:
                continue
            diff = a_coeff(m, l) - a_coeff(m - 2, l)
            log_w = m * math.log(y) + math.lgamma(y - (m - 1) / 2) - math.lgamma(y + (m + 1) / 2)
            total += math.exp(log_w) * diff
        out.append(math.pi ** l / math.factorial(l) * total)
    return tuple(out)


def _bessel_route(params: BetaStarParams) -> tuple[float, ...]:
    d, alpha = params.d, params.alpha
    out = []
    for l in range(1, d + 1):
        total = 0.0
        for m in range(l, d + 1):
            if (m - d) % 2:
                continue
            num = _comb(m, l) * _comb(m + l, l) - _comb(m - 2, l) * _comb(m + l - 2, l)
            total += specfun.bessel_k_scaled(m - 0.5, alpha / 2) * num
        out.append(math.sqrt(alpha / math.pi) * total)
    return tuple(out)


def expected_f_vector(params: BetaStarParams, route: str = "auto",
                      verify: bool = False) -> ExpectedFVector:
    """Expected f-vector of the beta* polytope.

    Args:
        params: the parameter triple.
        route: ``"auto"`` picks a closed form at beta = (d+1)/2 or (d+2)/2,
            ``"general"`` forces the quadrature route.
        verify: also run the quadrature route and check agreement within
            ``ROUTE_AGREEMENT_TOL``; the deviation is stored on the result.

    Raises:
        ParameterError: beta < (d+1)/2.
        InfiniteExpectation: beta = (d+1)/2 and alpha <= (d-1)*pi.
    """
    _check_f_vector(params)
    d, beta = params.d, params.beta
    if route not in ("auto", "general"):
        raise ValueError(f"unknown route {route!r}")
    if route == "auto" and _close(beta, (d + 1) / 2):
        values, kind = _half_route(params), Route.CLOSED_FORM_HALF
    elif route == "auto" and _close(beta, (d + 2) / 2):
        values, kind = _bessel_route(params), Route.CLOSED_FORM_BESSEL
    else:
        values, kind = _general_route(params), Route.GENERAL_QUADRATURE
    deviation = None
    if verify and kind is not Route.GENERAL_QUADRATURE:
        general = _general_route(params)
        deviation = max(abs(a - b) / abs(b) for a, b in zip(values, general))
        if deviation > ROUTE_AGREEMENT_TOL:
            raise ArithmeticError(
                f"closed-form and quadrature routes disagree (relative deviation {deviation:.2e})")
    return ExpectedFVector(values, kind, deviation)


def expected_f_vector_zero_cell(d: int, lambda_intensity: float, beta: float,
                                **kwargs) -> ExpectedFVector:
    """Expected f-vector of the hyperbolic Poisson zero cell."""
    alpha = alpha_for_zero_cell(d, lambda_intensity, beta)
    return expected_f_vector(BetaStarParams(d, alpha, beta), **kwargs).reversed()


def expected_f_vector_voronoi(d: int, lambda_intensity: float, **kwargs) -> ExpectedFVector:
    """Expected f-vector of the typical hyperbolic Poisson-Voronoi cell."""
    alpha = alpha_for_voronoi(d, lambda_intensity)
    return expected_f_vector(BetaStarParams(d, alpha, float(d)), **kwargs).reversed()


def limit_f_vector(d: int, beta: float) -> tuple[float, ...]:
    """alpha -> infinity limit of the expected f-vector."""
    if beta < (d + 1) / 2 and not _close(beta, (d + 1) / 2):
        raise ParameterError(f"need beta >= (d+1)/2 = {(d + 1) / 2}, got beta={beta}")
    lam = 2.0 * beta - d
    out = []
    for k in range(d):
        total = 0.0
        for s in range((d - k - 1) // 2 + 1):
            m = d - 2 * s
            total += i_star_infinity(m, lam) * j_tilde_sum(m, k + 1, beta - s - 0.5)
        out.append(2.0 * total)
    return tuple(out)


# ------------------------------------------------------- T-functional ---

def non_absorption_p(d: int, alpha: float, beta: float, h: float | np.ndarray):
    """p_{d,alpha,beta}(h) = exp(-alpha c int_h^inf (r^2-1)^{-beta+(d-1)/2} dr)."""
    BetaStarParams(d, alpha, beta)
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr <= 1):
        raise ParameterError("non_absorption_p needs h > 1")
    lam = 2.0 * beta - d
    with np.errstate(divide="ignore"):
        w = np.arctanh(1.0 / h_arr)
    out = np.exp(-alpha * _tail_exponent(lam)(np.atleast_1d(w)))
    return float(out[0]) if np.ndim(h) == 0 else out.reshape(h_arr.shape)


def s_const(d: int, beta: float, b: float) -> float:
    """The constant S_{d,beta}(b) of the T-functional formula."""
    if d == 1:
        return 1.0
    if not b < 2 * beta - d:
        raise ParameterError(f"S_(d,beta)(b) needs b < 2*beta - d, got b={b}")
    log_s = (-d * log_c_tilde(d - 1, beta) - (b + 1) * math.lgamma(d)
             + math.lgamma(d * (beta - (d - 1) / 2) - (d - 1) * (b + 1) / 2)
             - math.lgamma(d * (beta - (d + b) / 2))
             + d * (math.lgamma(beta - (d + b) / 2) - math.lgamma(beta - (d - 1) / 2)))
    for i in range(1, d):
        log_s += math.lgamma((i + b + 1) / 2) - math.lgamma(i / 2)
    return math.exp(log_s)


def _check_T(d: int, alpha: float, beta: float, a: float, b: float) -> None:
    if a < 0 or b < 0:
        raise ParameterError(f"need a, b >= 0, got a={a}, b={b}")
    if d == 1:
        if not beta > 1:
            raise ParameterError(f"d = 1 needs beta > 1, got beta={beta}")
        if not a < 2 * beta - 1:
            raise InfiniteExpectation(f"d = 1 needs a < 2*beta-1 = {2 * beta - 1}, got a={a}")
        return
    half = (d + 1) / 2
    if _close(beta, half):
        if not b < 1:
            raise InfiniteExpectation(f"beta = (d+1)/2 needs 0 <= b < 1, got b={b}")
        bound = 2 * d - (d - 1) * (b + 1) - 1
        if not a < bound:
            raise InfiniteExpectation(f"beta = (d+1)/2 needs a < {bound}, got a={a}")
        crit = math.pi * (d - 1) * (1 - b)
        if not alpha > crit:
            raise InfiniteExpectation(f"beta = (d+1)/2 needs alpha > pi(d-1)(1-b) = {crit}")
    elif beta > half:
        if not b < 2 * beta - d:
            raise InfiniteExpectation(f"need b < 2*beta-d = {2 * beta - d}, got b={b}")
        bound = d * (2 * beta - d + 1) - (d - 1) * (b + 1) - 1
        if not a < bound:
            raise InfiniteExpectation(f"need a < d(2beta-d+1)-(d-1)(b+1)-1 = {bound}, got a={a}")
    else:
        raise InfiniteExpectation(f"E T_(a,b) is infinite for d/2 < beta < (d+1)/2, got beta={beta}")


@lru_cache(maxsize=1024)
def expected_T(d: int, alpha: float, beta: float, a: float, b: float) -> float:
    """Expected T-functional sum_F dist(F)^a V_{d-1}(F)^b over facets.

    Raises:
        InfiniteExpectation: outside the finiteness region.
    """
    BetaStarParams(d, alpha, beta)
    _check_T(d, alpha, beta, a, b)
    lam = 2.0 * beta - d
    if _close(beta, (d + 1) / 2):
        lam = 1.0
    e = (d - 1) * (b + 1) / 2 - d * (beta - (d - 1) / 2)
    q = -2.0 * e - 2.0
    tail = _tail_exponent(lam)

    def integrand(w):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            log_coth = -np.log(np.tanh(w))
            log_val = -alpha * tail(w) + a * log_coth + q * _log_sinh(w)
        return np.exp(np.where(np.isnan(log_val), -np.inf, log_val))

    c1 = c_tilde(1, (lam + 1) / 2)
    scale = min(1.0, max(1e-3, (lam / (c1 * alpha)) ** (1.0 / lam)))
    integral = integrate_semi_infinite(integrand, 0.0, rel_tol=1e-12, abs_tol=0.0,
                                       singular_left=not (_is_int(q) and _is_int(a)),
                                       scale=scale).value
    log_pref = (d * (log_c_tilde(d, beta) + math.log(alpha)) - math.log(d)
                + math.log(sphere_surface(d)) + math.log(s_const(d, beta, b)))
    return math.exp(log_pref) * integral


def expected_intrinsic_volume(d: int, alpha: float, beta: float, k: int) -> float:
    """Expected k-th intrinsic volume via the Kubota-type reduction.

    The k-dimensional projection is a beta* polytope with shape
    beta - (d-k)/2, whose volume is T_{1,1}/k.
    """
    BetaStarParams(d, alpha, beta)
    if not 1 <= k <= d:
        raise ParameterError(f"need 1 <= k <= d, got k={k}")
    if not beta > (d + 1) / 2 or _close(beta, (d + 1) / 2):
        raise InfiniteExpectation(f"intrinsic volumes are infinite for beta <= (d+1)/2 = {(d + 1) / 2}")
    kappa = specfun.ball_volume
    flag = math.comb(d, k) * kappa(d) / (kappa(k) * kappa(d - k))
    return flag / k * expected_T(k, alpha, beta - (d - k) / 2, 1.0, 1.0)


# -------------------------------------------------------- asymptotics ---

def i_star_infinity(m: int, lam: float) -> float:
    """Large-alpha limit of the external angle sum."""
    if m < 1 or lam < 1:
        raise ParameterError(f"need m >= 1 and lambda >= 1, got m={m}, lambda={lam}")
    log_v = ((m - 1) * math.log(lam) - math.log(m) + log_c_tilde(1, (lam * m + 1) / 2)
             - m * log_c_tilde(1, (lam + 1) / 2))
    return math.exp(log_v)


def i_star_correction(m: int, lam: float) -> float:
    """First-order correction K_1 of the external angle sum (coefficient of alpha^{-2/lam})."""
    if m < 1 or lam < 1:
        raise ParameterError(f"need m >= 1 and lambda >= 1, got m={m}, lambda={lam}")
    if m == 1:
        return 0.0
    e = m + 2.0 / lam
    log_v = (e * math.log(lam) + math.log(m - 1) + ((m - 1) / 2 + 1 / lam) * math.log(math.pi)
             - math.log(2 * (lam + 2)) - math.lgamma(m + 1)
             + math.lgamma((lam * m + 1) / 2) + math.lgamma(e) - math.lgamma(lam * m / 2)
             + e * (math.lgamma(lam / 2) - math.lgamma((lam + 1) / 2)))
    return math.exp(log_v)


def monotonicity_scan(d: int, beta: float, k: int,
                      alpha_grid: Sequence[float]) -> tuple[list[float], bool]:
    """Expected f_k along an alpha grid and whether it strictly decreases."""
    grid = list(alpha_grid)
    if sorted(grid) != grid:
        raise ParameterError("alpha grid must be increasing")
    values = [expected_f_vector(BetaStarParams(d, float(a), beta))[k] for a in grid]
    decreasing = all(y < x for x, y in zip(values, values[1:]))
    return values, decreasing
