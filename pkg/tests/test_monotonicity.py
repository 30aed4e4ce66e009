import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import perturbed_field
from pcaplab.manifold import cone, euclidean, smoothed_cone
from pcaplab.monotonicity import (beta_threshold, conformal_constant, default_t_grid,
                                  derivative_formula_check, f_beta_series, f_beta_value,
                                  f_infty_series, kato_residual, phi_reparam_check,
                                  second_derivative_check, sup_gradient_inequality)
from pcaplab.radial import f_beta_radial, solve_radial


def test_threshold_and_constants():
    assert beta_threshold(3, 2.0) == 0.5
    assert conformal_constant(3, 2.0) == 1.0
    assert beta_threshold(4, 1.5) == pytest.approx(5.0 / 3.0)


def test_field_value_agrees_with_radial_closed_form():
    sol = solve_radial(smoothed_cone(3, 0.5), 1.7, 1.0)
    assert f_beta_value(sol, 1.3, 2.5) == pytest.approx(f_beta_radial(sol, 1.3, 2.5), rel=1e-14)


@pytest.mark.parametrize("prof", [euclidean(3), cone(3, 0.5)])
def test_constant_on_rigid_models(prof):
    sol = solve_radial(prof, 2.0, 1.0)
    grid = default_t_grid()
    for beta in (0.505, 1.0, 2.0):
        assert f_beta_series(sol, beta, grid, derivatives=False).variation() < 1e-10
    assert f_infty_series(sol, grid).variation() < 1e-10


def test_radial_derivative_routes_agree():
    sol = solve_radial(smoothed_cone(3, 0.5), 2.0, 1.0)
    for t in (1.5, 3.0):
        chk = derivative_formula_check(sol, 1.0, t)
        assert chk.dF_level < 0
        assert chk.agreement < 1e-3
        # the literal conformal prefactor rescales by K^q; here K = 1 so it coincides
        assert chk.dF_bulk_literal == pytest.approx(chk.dF_bulk, rel=1e-12)
    sol = solve_radial(smoothed_cone(4, 0.5), 2.0, 1.0)
    chk = derivative_formula_check(sol, 2.0, 2.0)
    assert chk.agreement < 1e-3
    # K = 1 also for n = 4, p = 2; at p = 2.5 the two prefactors differ
    sol = solve_radial(smoothed_cone(4, 0.5), 2.5, 1.0)
    chk = derivative_formula_check(sol, 2.0, 2.0)
    assert chk.agreement < 1e-3
    assert abs(chk.dF_bulk_literal / chk.dF_bulk - 1.0) > 0.5


def test_second_derivative_and_sup_gradient_radial():
    sol = solve_radial(smoothed_cone(3, 0.5), 2.0, 1.0)
    chk = second_derivative_check(sol, 1.0, 2.0)
    assert chk.convex and chk.agreement < 1e-3
    assert sup_gradient_inequality(sol, 2.0).margin > 0


def test_kato_identity_radial():
    for prof in (euclidean(3), smoothed_cone(3, 0.5), smoothed_cone(5, 0.3)):
        for p in (1.5, 2.0, 2.5):
            assert kato_residual(solve_radial(prof, p, 1.0)).max_residual < 1e-12


def test_reparametrisation():
    sol = solve_radial(smoothed_cone(4, 0.7), 2.5, 1.0)
    grid = np.geomspace(1.0, 6.0, 5)
    for series in (f_beta_series(sol, 1.5, grid, derivatives=False), f_infty_series(sol, grid)):
        chk = phi_reparam_check(series, sol)
        assert chk.deviation < 1e-12 and chk.constant != 1.0


def test_series_rejects_bad_grids():
    sol = solve_radial(euclidean(3), 2.0, 1.0)
    with pytest.raises(ValueError):
        f_beta_series(sol, 1.0, [1.5, 2.0])
    with pytest.raises(ValueError):
        f_infty_series(sol, [1.0, 1.0])


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.2, 0.95), p=st.floats(1.3, 2.6), scale=st.floats(1.01, 3.0))
def test_radial_monotonicity_property(a, p, scale):
    sol = solve_radial(smoothed_cone(3, a), p, 1.0)
    beta = beta_threshold(3, p) * scale
    series = f_beta_series(sol, beta, np.geomspace(1.0, 8.0, 6), derivatives=False)
    assert series.is_nonincreasing(1e-9 * series.F[0])
    sup = f_infty_series(sol, np.geomspace(1.0, 8.0, 6))
    assert sup.is_nonincreasing(1e-9 * sup.F[0])


def test_perturbed_field_checks_coarse():
    f = perturbed_field(2.0, 128, 48)
    grid = [1.0, 1.5, 2.0, 3.0]
    s = f_beta_series(f, 1.0, grid, derivatives=False)
    assert s.is_nonincreasing(1e-3 * s.F[0]) and s.variation() > 1e-3
    chk = derivative_formula_check(f, 1.0, 2.0)
    assert chk.agreement < 0.05
    assert min(chk.bulk_terms_min) >= -1e-8
    assert kato_residual(f).max_residual < 1e-2
    assert phi_reparam_check(s, f).deviation < 1e-12
