"""Gamma-family constants, Bessel K, Bernoulli numbers, Q_n and A[n,k]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import BoundExceeded, ParameterError
from .quadrature import integrate_semi_infinite

__all__ = [
    "c_tilde",
    "log_c_tilde",
    "sphere_surface",
    "ball_volume",
    "bessel_k",
    "bessel_k_scaled",
    "bernoulli",
    "RationalPoly",
    "q_poly",
    "a_coeff",
    "a_coeff_exact",
    "bp_const",
    "BERNOULLI_BOUND",
]

BERNOULLI_BOUND = 64
_HALF_INTEGER_TOL = 1e-12


def log_c_tilde(d: int, beta: float) -> float:
    """Logarithm of the beta-prime normalising constant."""
    if not beta > d / 2:
        raise ParameterError(f"c_tilde needs beta > d/2, got beta={beta}, d={d}")
    return math.lgamma(beta) - 0.5 * d * math.log(math.pi) - math.lgamma(beta - d / 2)


def c_tilde(d: int, beta: float) -> float:
    """Return Gamma(beta) / (pi^{d/2} Gamma(beta - d/2))."""
    return math.exp(log_c_tilde(d, beta))


def sphere_surface(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    if d < 1:
        raise ParameterError(f"sphere_surface needs d >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d (1 for d = 0)."""
    if d < 0:
        raise ParameterError(f"ball_volume needs d >= 0, got {d}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _is_half_integer(nu: float) -> bool:
    return abs(nu - round(nu - 0.5) - 0.5) < _HALF_INTEGER_TOL


def _half_integer_poly(n: int, z: float) -> float:
    # K_{n+1/2}(z) = sqrt(pi/2z) e^{-z} sum_k (n+k)!/(k!(n-k)!(2z)^k)
    total = 0.0
    for k in range(n + 1):
        total += math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k)) / (2.0 * z) ** k
    return total


def bessel_k_scaled(nu: float, z: float, method: str = "auto") -> float:
    """Return e^z K_nu(z).

    Args:
        nu: order, nu > 0 (K is even in nu, so negative orders are folded).
        z: argument, z > 0.
        method: ``"auto"`` uses the finite closed form for half-integer
            orders and quadrature otherwise; ``"quadrature"`` forces the
            integral representation.
    """
    if not z > 0:
        raise ParameterError(f"bessel_k needs z > 0, got {z}")
    nu = abs(nu)
    if method == "auto" and _is_half_integer(nu):
        n = int(round(nu - 0.5))
        value = math.sqrt(math.pi / (2.0 * z)) * _half_integer_poly(n, z)
    elif method in ("auto", "quadrature"):
        # e^z K_nu(z) = int_0^inf cosh(nu t) exp(-z (cosh t - 1)) dt
        def integrand(t):
            with np.errstate(over="ignore"):
                log_cosh = np.logaddexp(nu * t, -nu * t) - math.log(2.0)
                return np.exp(log_cosh - 2.0 * z * np.sinh(0.5 * t) ** 2)

        value = integrate_semi_infinite(integrand, 0.0, rel_tol=1e-13, abs_tol=0.0).value
    else:
        raise ValueError(f"unknown method {method!r}")
    if not math.isfinite(value):
        raise OverflowError(f"K_{nu}({z}) exceeds the floating point range")
    return value


def bessel_k(nu: float, z: float, method: str = "auto") -> float:
    """Modified Bessel function of the second kind K_nu(z)."""
    scaled = bessel_k_scaled(nu, z, method)
    log_value = math.log(scaled) - z
    if log_value > 709.0:
        raise OverflowError(f"K_{nu}({z}) exceeds the floating point range")
    return math.exp(log_value)


@lru_cache(maxsize=None)
def _bernoulli_table(bound: int) -> tuple[Fraction, ...]:
    # Standard recurrence sum_{k=0}^{m} C(m+1,k) B_k = 0 with B_1 = -1/2.
    b = [Fraction(1)]
    for m in range(1, bound + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * b[k]
        b.append(-acc / (m + 1))
    return tuple(b)


def bernoulli(m: int, bound: int = BERNOULLI_BOUND) -> Fraction:
    """Exact Bernoulli number B_m for even m <= bound."""
    if m < 0 or m % 2:
        raise ParameterError(f"bernoulli needs an even non-negative index, got {m}")
    if m > bound:
        raise BoundExceeded(f"bernoulli index {m} exceeds the bound {bound}")
    return _bernoulli_table(bound)[m]


@dataclass(frozen=True)
class RationalPoly:
    """Polynomial with exact rational coefficients, ``coeffs[j]`` is [x^j]."""

    coeffs: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, j: int) -> Fraction:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else Fraction(0)

    def __call__(self, x: float) -> float:
        return float(sum(float(c) * x ** j for j, c in enumerate(self.coeffs)))


@lru_cache(maxsize=None)
def q_poly(n: int) -> RationalPoly:
    """Q_n(x) = prod (1 + j^2 x^2) over j = n-1, n-3, ... > 0."""
    if n < 0:
        raise ParameterError(f"q_poly needs n >= 0, got {n}")
    coeffs = [Fraction(1)]
    for j in range(n - 1, 0, -2):
        factor = [Fraction(1), Fraction(0), Fraction(j * j)]
        out = [Fraction(0)] * (len(coeffs) + 2)
        for i, c in enumerate(coeffs):
            for k, f in enumerate(factor):
                out[i + k] += c * f
        coeffs = out
    return RationalPoly(tuple(coeffs))


def _tanh_coeff(m: int) -> Fraction:
    # tanh u = sum_{m>=1} t_m u^{2m-1}
    two = 2 ** (2 * m)
    return Fraction(two * (two - 1)) * bernoulli(2 * m) / math.factorial(2 * m)


def _coth_coeff(m: int) -> Fraction:
    # coth u = 1/u + sum_{m>=1} c_m u^{2m-1}
    return Fraction(2 ** (2 * m)) * bernoulli(2 * m) / math.factorial(2 * m)


@lru_cache(maxsize=None)
def a_coeff_exact(n: int, k: int) -> tuple[tuple[int, Fraction], ...]:
    """A[n,k] as a finite sum of rational multiples of powers of pi.

    Returns ``((p, c), ...)`` meaning sum c * pi^p.
    """
    if k < 0 or n < k:
        return ()
    q = q_poly(n)
    if k % 2 == 0:
        c = q.coefficient(k)
        return ((0, c),) if c else ()
    terms: dict[int, Fraction] = {}
    if n % 2 == 1:
        # (2/pi) x term of the cotanh expansion
        c = q.coefficient(k - 1) * 2
        if c:
            terms[-1] = terms.get(-1, Fraction(0)) + c
    # [x^k] of Q_n times x^{-(2m-1)} needs j = k + 2m - 1 with j even
    for j in range(k + 1, q.degree + 1, 2):
        qj = q.coefficient(j)
        if not qj:
            continue
        m = (j - k + 1) // 2
        series = _coth_coeff(m) if n % 2 else _tanh_coeff(m)
        p = 2 * m - 1
        terms[p] = terms.get(p, Fraction(0)) + qj * series / 2 ** p
    return tuple(sorted((p, c) for p, c in terms.items() if c))


@lru_cache(maxsize=None)
def a_coeff(n: int, k: int) -> float:
    """The coefficient array A[n,k] (zero when n < k or k < 0)."""
    terms = a_coeff_exact(n, k)
    if not terms:
        return 0.0
    with mpmath.workdps(50):
        total = mpmath.mpf(0)
        for p, c in terms:
            total += mpmath.mpf(c.numerator) / c.denominator * mpmath.pi ** p
        return float(total)


def bp_const(d: int, k: int) -> float:
    """Blaschke-Petkantschin constant B(d,k)."""
    if not 1 <= k <= d + 1:
        raise ParameterError(f"bp_const needs 1 <= k <= d+1, got d={d}, k={k}")
    if k == 1:
        return 1.0
    log_value = (d - k + 1) * math.lgamma(k)
    for j in range(d - k + 2, d + 1):
        log_value += math.log(sphere_surface(j))
    for j in range(1, k):
        log_value -= math.log(sphere_surface(j))
    return math.exp(log_value)
