from __future__ import annotations

import math

import numpy as np
import pytest

from betastar.analytic import BetaStarParams, expected_f_vector
from betastar.errors import InfiniteExpectation, ParameterError
from betastar.geometry import convex_hull
from betastar.harness import (SampleRun, compare, convergence_scan, efron_angle,
                              efron_de_sitter_check, run_replicates, summarize, verify_f_vector,
                              verify_T, verify_voronoi_f_vector, verify_zero_cell_f_vector)


def test_summarize_mean_and_stderr():
    run = summarize("x", {"a": 1}, [1.0, 2.0, 3.0, 4.0], seed=7)
    assert run.mean == 2.5
    assert run.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert run.replicates == 4
    assert "values" not in run.to_dict()
    assert run.to_dict(with_values=True)["values"] == (1.0, 2.0, 3.0, 4.0)


def test_summarize_needs_two_values():
    with pytest.raises(ParameterError):
        summarize("x", {}, [1.0], seed=0)


def test_compare_z_and_pass():
    run = SampleRun("x", {}, 10, 5.0, 0.5, 0)
    rep = compare(4.0, run)
    assert rep.z == pytest.approx(2.0)
    assert rep.passed
    assert not compare(3.0, run).passed
    assert compare(5.0, SampleRun("x", {}, 10, 5.0, 0.0, 0)).z == 0.0
    assert math.isinf(compare(4.0, SampleRun("x", {}, 10, 5.0, 0.0, 0)).z)


def test_run_replicates_order_and_threads():
    fn = lambda s: s.generator().uniform()
    one = run_replicates(fn, 8, seed=3)
    four = run_replicates(fn, 8, seed=3, threads=4)
    assert one == four
    with pytest.raises(ParameterError):
        run_replicates(fn, 0, seed=3)


def test_verify_f_vector_reproducible_and_passing():
    params = BetaStarParams(2, 6.0, 2.0)
    a = verify_f_vector(params, 60, seed=5)
    b = verify_f_vector(params, 60, seed=5, threads=3)
    assert [r.run.mean for r in a] == [r.run.mean for r in b]
    assert all(r.passed for r in a)
    assert a[0].analytic == pytest.approx(expected_f_vector(params)[0])


def test_verify_f_vector_rejects_single_replicate():
    with pytest.raises(ParameterError):
        verify_f_vector(BetaStarParams(2, 6.0, 2.0), 1, seed=0)


def test_verify_f_vector_rejects_non_polytope_phase():
    with pytest.raises(ParameterError):
        verify_f_vector(BetaStarParams(2, 1.0, 1.5), 10, seed=0)


def test_verify_zero_cell_and_voronoi():
    zc = verify_zero_cell_f_vector(2, 3 * math.pi, 1.5, 60, seed=1)
    vo = verify_voronoi_f_vector(2, 1.0, 60, seed=2)
    assert all(r.passed for r in zc + vo)
    assert len(zc) == len(vo) == 2


@pytest.mark.parametrize("a,b", [(0.0, 0.0), (1.0, 1.0)])
def test_verify_T_d2(a, b):
    rep = verify_T(BetaStarParams(2, 5.0, 3.0), a, b, 80, seed=4)
    assert rep.passed, rep.to_dict()


def test_verify_T_zero_zero_is_facet_count():
    params = BetaStarParams(2, 5.0, 3.0)
    rep = verify_T(params, 0.0, 0.0, 10, seed=4)
    assert rep.analytic == pytest.approx(expected_f_vector(params)[1], rel=1e-8)


def test_verify_T_d1():
    rep = verify_T(BetaStarParams(1, 2.0, 2.0), 1.0, 0.0, 200, seed=6)
    assert rep.passed, rep.to_dict()


def test_verify_T_infinite_raises_before_sampling():
    with pytest.raises(InfiniteExpectation):
        verify_T(BetaStarParams(2, 5.0, 1.5), 0.0, 3.0, 10, seed=0)


def test_efron_angle_of_square():
    # de Sitter angle of a polytope containing the unit ball is a number in (0, 1]
    sq = convex_hull(np.array([[2.0, 2.0], [-2.0, 2.0], [2.0, -2.0], [-2.0, -2.0]]))
    val = efron_angle(sq, np.random.default_rng(0))
    assert 0.0 < val <= 1.0


def test_efron_check_rejects_small_alpha():
    with pytest.raises(ParameterError):
        efron_de_sitter_check(2, 2.0, 10, seed=0)


def test_convergence_scan_slope():
    grid = 25 * 2.0 ** np.arange(4)
    fit = convergence_scan(2, 2.0, 0, grid)
    assert fit.expected_slope == pytest.approx(-1.0)
    assert abs(fit.slope - fit.expected_slope) < 0.1


def test_convergence_scan_synthetic():
    grid = 2.0 ** np.arange(1, 7)
    fit = convergence_scan(2, 2.0, 0, grid, f=lambda a: 3 + 5 * a ** -1.0, limit=3.0)
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(5), abs=1e-10)


def test_convergence_scan_errors():
    with pytest.raises(ParameterError):
        convergence_scan(2, 2.0, 0, [10, 20, 40])
    with pytest.raises(ParameterError):
        convergence_scan(2, 2.0, 0, [10, 20, 30, 40])
    with pytest.raises(ParameterError):
        convergence_scan(2, 2.0, 0, [10, 20, 40, 80], f=lambda a: 1.0, limit=1.0)
