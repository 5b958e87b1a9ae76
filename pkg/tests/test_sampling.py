from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from betastar.analytic import BetaStarParams, limit_f_vector
from betastar.errors import ParameterError
from betastar.geometry import Polytope, f_vector
from betastar.sampling import (NotTerminated, PoissonRadialSampler, RadialSampler, RngStream,
                               beta_star_radii, cap_covering_experiment, d_hyp, d_kl, d_poi,
                               de_sitter_involution, gnomonic, poi_to_kl, sample_beta_prime,
                               sample_beta_star_atoms, sample_beta_star_polytope,
                               sample_hyperbolic_voronoi_points, sample_poisson_polytope,
                               sample_voronoi_typical_cell, sample_zero_cell, stereographic,
                               w_radial_cdf)
from betastar.specfun import c_tilde, sphere_surface


def _psi_oracle(d, alpha, beta, r):
    val, _ = integrate.quad(lambda t: t ** (d - 1) * (t * t - 1) ** (-beta), r, np.inf,
                            epsabs=0, epsrel=1e-12, limit=400)
    return alpha * c_tilde(d, beta) * sphere_surface(d) * val


def test_rng_stream_determinism():
    a = RngStream(5, 2).generator().standard_normal(4)
    b = RngStream(5, 2).generator().standard_normal(4)
    c = RngStream(5, 3).generator().standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert RngStream(5).child(1) != RngStream(5).child(2)
    with pytest.raises(ParameterError):
        RngStream(-1)


@pytest.mark.parametrize("d,alpha,beta", [(2, 1.0, 2.0), (3, 2.5, 2.0), (4, 0.7, 3.5)])
@pytest.mark.parametrize("r", [1.01, 1.5, 4.0, 30.0])
def test_psi_matches_quadrature(d, alpha, beta, r):
    assert RadialSampler(d, alpha, beta).psi(np.array([r]))[0] == pytest.approx(
        _psi_oracle(d, alpha, beta, r), rel=1e-8)


def test_radii_invert_psi():
    s = RadialSampler(3, 2.0, 2.5)
    gamma = np.array([0.1, 1.0, 7.0, 50.0])
    np.testing.assert_allclose(s.psi(s.radii_from_arrivals(gamma)), gamma, rtol=1e-10)


def test_poisson_radial_sampler_inverts_psi():
    s = PoissonRadialSampler(2, 1.5, 2.0)
    gamma = np.array([0.3, 2.0, 9.0])
    np.testing.assert_allclose(s.psi(s.radii_from_arrivals(gamma)), gamma, rtol=1e-12)


def test_radii_decrease_and_exceed_one():
    r = beta_star_radii(BetaStarParams(2, 1.0, 2.0), 500, RngStream(1))
    assert np.all(r > 1)
    assert np.all(np.diff(r) < 0)


def test_largest_radius_median():
    # P(R_1 > m) = 1 - exp(-psi(m)); the median solves psi(m) = log 2
    params = BetaStarParams(2, 3.0, 2.0)
    gen = np.random.default_rng(4)
    r1 = np.array([beta_star_radii(params, 1, gen)[0] for _ in range(4000)])
    s = RadialSampler(2, 3.0, 2.0)
    med = s.radii_from_arrivals(np.array([math.log(2)]))[0]
    frac = np.mean(r1 > med)
    assert abs(frac - 0.5) < 4 * 0.5 / math.sqrt(r1.size)


def test_atoms_count_is_poisson():
    params = BetaStarParams(2, 5.0, 2.0)
    gen = np.random.default_rng(5)
    counts = [sample_beta_star_atoms(params, 1.5, gen).shape[0] for _ in range(400)]
    expected = _psi_oracle(2, 5.0, 2.0, 1.5)
    assert abs(np.mean(counts) - expected) < 4 * math.sqrt(expected / 400)
    with pytest.raises(ParameterError):
        sample_beta_star_atoms(params, 1.0, gen)


@pytest.mark.parametrize("dim,beta", [(1, 1.0), (2, 2.0), (3, 2.5)])
def test_beta_prime_radial_law(dim, beta):
    x = sample_beta_prime(dim, beta, 4000, RngStream(dim))
    r = np.linalg.norm(x, axis=1)
    # |X|^2/(1+|X|^2) ~ Beta(dim/2, beta - dim/2)
    res = stats.kstest(r * r / (1 + r * r), stats.beta(dim / 2, beta - dim / 2).cdf)
    assert res.pvalue > 1e-3


def test_beta_prime_cauchy_median():
    x = sample_beta_prime(1, 1.0, 20000, RngStream(9))[:, 0]
    assert abs(np.median(x)) < 0.05
    assert np.median(np.abs(x)) == pytest.approx(1.0, abs=0.05)


def test_hyperbolic_maps():
    x = np.array([math.cosh(1.0), math.sinh(1.0), 0.0])
    np.testing.assert_allclose(gnomonic(x), [math.tanh(1.0), 0.0])
    np.testing.assert_allclose(stereographic(x), [math.tanh(0.5), 0.0])
    w = stereographic(x)
    np.testing.assert_allclose(poi_to_kl(w), gnomonic(x))
    assert d_kl(gnomonic(x)) == pytest.approx(1.0)
    assert d_poi(w) == pytest.approx(1.0)
    o = np.array([1.0, 0.0, 0.0])
    assert d_hyp(o, x) == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        gnomonic(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ParameterError):
        d_kl(np.array([1.0, 0.0]))


def test_de_sitter_involution():
    v = np.random.default_rng(0).standard_normal((50, 3)) * 3
    v = v[np.linalg.norm(v, axis=1) > 1.01]
    np.testing.assert_allclose(de_sitter_involution(de_sitter_involution(v)), v, rtol=1e-10)
    with pytest.raises(ParameterError):
        de_sitter_involution(np.array([0.5, 0.0]))


def test_w_points_radial_law():
    d, beta, r_min = 2, 2.0, 0.9
    cdf_ref = _w_cdf_oracle(d, beta, r_min)
    for r in (0.3, 0.6, 0.85):
        assert w_radial_cdf(d, beta, r_min, r) == pytest.approx(cdf_ref(r), rel=1e-7)
    pts = sample_hyperbolic_voronoi_points(d, 20.0, beta, r_min, RngStream(3)).points
    radii = np.linalg.norm(pts, axis=1)
    assert radii.size > 100
    assert np.all(radii <= r_min)
    assert stats.kstest(radii, lambda r: w_radial_cdf(d, beta, r_min, r)).pvalue > 1e-3


def _w_cdf_oracle(d, beta, r_min):
    def dens(r):
        return r ** (d - 1) * r ** (2 * beta - 2 * d) * (1 - r * r) ** (-beta)
    total = integrate.quad(dens, 0, r_min, epsrel=1e-12)[0]
    return lambda r: integrate.quad(dens, 0, r, epsrel=1e-12)[0] / total


def test_w_points_expected_count():
    d, beta, r_min, lam = 2, 2.0, 0.9, 1.5
    sample = sample_hyperbolic_voronoi_points(d, lam, beta, r_min, RngStream(0))
    dens = lambda r: r ** (d - 1) * r ** (2 * beta - 2 * d) * (1 - r * r) ** (-beta)
    ref = 2 ** d * lam * sphere_surface(d) * integrate.quad(dens, 0, r_min, epsrel=1e-12)[0]
    assert sample.expected_count == pytest.approx(ref, rel=1e-8)


def test_w_points_empty_at_zero_radius():
    sample = sample_hyperbolic_voronoi_points(2, 1.0, 2.0, 0.0, RngStream(0))
    assert sample.points.shape == (0, 2)
    assert sample.expected_count == 0.0
    with pytest.raises(ParameterError):
        sample_hyperbolic_voronoi_points(2, 1.0, 2.0, 1.0, RngStream(0))


def test_covering_without_caps():
    res = cap_covering_experiment(2, 1.0, 1.5, 0, RngStream(0))
    assert (res.covered, res.uncovered_direction_fraction) == (False, 1.0)


def test_covering_many_caps_in_polytope_phase():
    res = cap_covering_experiment(2, 3 * math.pi, 1.5, 2000, RngStream(1))
    assert res.covered


def test_covering_three_dimensions_grid():
    res = cap_covering_experiment(3, 1.0, 2.0, 5, RngStream(2), grid_size=2000)
    assert 0.0 < res.uncovered_direction_fraction <= 1.0


def test_not_terminated_at_critical_point():
    # alpha = pi/2, beta = 3/2, d = 2 is not in the polytope phase
    out = sample_beta_star_polytope(BetaStarParams(2, math.pi / 2, 1.5), RngStream(0), n_max=2000)
    assert isinstance(out, NotTerminated)
    assert out.n_max == 2000


def test_perfect_simulation_is_reproducible():
    params = BetaStarParams(3, 5.0, 2.5)
    a = sample_beta_star_polytope(params, RngStream(11))
    b = sample_beta_star_polytope(params, RngStream(11))
    np.testing.assert_array_equal(a.vertices, b.vertices)
    assert a.facets == b.facets


def test_perfect_simulation_matches_truncated_hull():
    # the hull of all atoms beyond a radius well below the inradius has the same law
    from betastar.geometry import convex_hull
    params = BetaStarParams(2, 4.0, 2.0)
    perfect = [sample_beta_star_polytope(params, RngStream(12, k)).n_vertices for k in range(300)]
    trunc = [convex_hull(sample_beta_star_atoms(params, 1.02, RngStream(13, k))).n_vertices
             for k in range(300)]
    se = math.sqrt(np.var(perfect, ddof=1) / 300 + np.var(trunc, ddof=1) / 300)
    assert abs(np.mean(perfect) - np.mean(trunc)) < 4 * se


def test_zero_cell_inside_unit_ball():
    cell = sample_zero_cell(2, 3 * math.pi, 1.5, RngStream(4))
    assert isinstance(cell, Polytope)
    assert np.all(np.linalg.norm(cell.vertices, axis=1) < 1)
    assert np.all(cell.offsets > 0)


def test_voronoi_cell_inside_unit_ball():
    cell = sample_voronoi_typical_cell(3, 1.0, RngStream(5))
    assert isinstance(cell, Polytope)
    assert np.all(np.linalg.norm(cell.vertices, axis=1) < 1)
    fv = f_vector(cell)
    assert fv[0] - fv[1] + fv[2] == 2


def test_poisson_polytope_mean_vertex_count():
    d, beta = 2, 2.0
    counts = [sample_poisson_polytope(d, 1.0, beta, RngStream(7, k)).n_vertices for k in range(400)]
    expected = limit_f_vector(d, beta)[0]
    se = np.std(counts, ddof=1) / math.sqrt(len(counts))
    assert abs(np.mean(counts) - expected) < 4 * se


@pytest.mark.parametrize("d,beta,lam", [(2, 1.5, 2.0), (3, 2.0, 5.0)])
def test_hyperplane_distance_law(d, beta, lam):
    # n^{1/(beta-1)} (1 - r_n) concentrates at (lam / (2^beta (beta-1)))^{1/(beta-1)}
    from betastar.analytic import alpha_for_zero_cell
    params = BetaStarParams(d, alpha_for_zero_cell(d, lam, beta), beta)
    n = 10 ** 4
    vals = [n ** (1 / (beta - 1)) * (1 - 1 / beta_star_radii(params, n, RngStream(1, k))[-1])
            for k in range(200)]
    target = (lam / (2 ** beta * (beta - 1))) ** (1 / (beta - 1))
    assert np.median(vals) == pytest.approx(target, rel=0.1)


def test_nearly_tangent_facet_still_terminates():
    # this stream produces a facet within 1e-7 of the unit circle next to an atom of norm ~95
    out = sample_beta_star_polytope(BetaStarParams(2, 2 * math.pi, 1.5), RngStream(20240917, 4557))
    assert isinstance(out, Polytope)
    assert out.offsets.min() > 1
