import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcaplab.errors import ExponentOutOfRange, ExtrapolationDiverged, NonPositiveRadius, RootNotBracketed
from pcaplab.manifold import capped_cone, cone, euclidean, smoothed_cone
from pcaplab.monotonicity import beta_threshold
from pcaplab.radial import (capacity, decay_exponent, f_beta_radial, f_infty_radial,
                            green_bound_check, green_function, green_scale, li_yau_check,
                            normalised_capacity, p_to_one_limit, richardson_to_one, solve_radial)


@pytest.mark.parametrize("n,p,r0", [(3, 1.5, 0.5), (3, 2.0, 2.0), (4, 3.0, 1.0), (5, 1.5, 2.0)])
def test_euclidean_ball_closed_form(n, p, r0):
    sol = solve_radial(euclidean(n), p, r0)
    assert capacity(sol)[1] == pytest.approx(r0 ** (n - p), rel=1e-12)
    k = decay_exponent(p, n)
    for r in (r0, 1.7 * r0, 30 * r0, 1e4 * r0):
        assert sol.u(r) == pytest.approx((r0 / r) ** k, rel=1e-12)
    assert sol.residual < 1e-12


def test_cone_capacity_scales_with_avr():
    for a in (0.3, 0.5, 0.9):
        assert normalised_capacity(cone(3, a), 2.0, 1.5) == pytest.approx(a * a * 1.5, rel=1e-12)
        assert normalised_capacity(cone(4, a), 1.5, 1.0) == pytest.approx(a ** 3, rel=1e-12)


def test_capped_cone_capacity_is_the_cone_formula_at_the_vertex_distance():
    # a ball reaching into the conical part sees a cone with vertex at rho0 = h/h'
    prof = capped_cone(3, 0.5, 0.5)
    h, dh, _ = (float(x) for x in prof.evaluate(1.0))
    rho0 = h / dh
    assert rho0 == pytest.approx(0.6142857142857143 / 0.5, rel=1e-15)
    for p in (1.5, 2.0, 2.5):
        assert normalised_capacity(prof, p, 1.0) == pytest.approx(0.25 * rho0 ** (3 - p), rel=1e-11)


# C_p of smoothed cones, independently integrated with mpmath at 30 digits
SMOOTHED_ORACLE = [
    (0.5, 3, 2.0, 1.0, 0.52013909868927548),
    (0.5, 3, 1.5, 1.0, 0.68451594358525416),
    (0.8, 4, 2.5, 0.5, 0.2872798728748244),
    (0.8, 3, 2.0, 2.0, 1.4820489493889568),
]


@pytest.mark.parametrize("a,n,p,r0,expected", SMOOTHED_ORACLE)
def test_smoothed_cone_capacity_oracle(a, n, p, r0, expected):
    assert normalised_capacity(smoothed_cone(n, a), p, r0) == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("prof", [smoothed_cone(3, 0.5), capped_cone(4, 0.3, 2.0)])
def test_boundary_flux_equals_energy(prof):
    for p in (1.2, 1.5, 2.0, 2.7):
        cap, _, det = capacity(solve_radial(prof, p, 1.0))
        assert det["boundary_vs_energy"] < 1e-10
        assert det["cap_boundary"] == pytest.approx(cap, rel=1e-12)


def test_level_radii_and_errors():
    sol = solve_radial(euclidean(3), 2.0, 1.0)
    assert sol.radius_of_level(4.0) == pytest.approx(4.0, rel=1e-11)
    with pytest.raises(RootNotBracketed):
        sol.radius_of_level(0.5)
    with pytest.raises(ExponentOutOfRange):
        solve_radial(euclidean(3), 3.0, 1.0)
    with pytest.raises(NonPositiveRadius):
        solve_radial(euclidean(3), 2.0, 0.0)


def test_green_conventions():
    # unit-flux Green's function of R^3 at p=2 is 1/(4 pi r)
    assert green_function(euclidean(3), 2.0, 2.0) == pytest.approx(1 / (8 * math.pi), rel=1e-12)
    assert green_scale(3, 2.0) == pytest.approx(4 * math.pi)
    rep = green_bound_check(euclidean(3), 1.5)
    assert rep.min_ratio == pytest.approx(1.0, rel=1e-10)
    assert rep.max_ratio == pytest.approx(1.0, rel=1e-10)
    # on a cone the ratio is AVR^{-1/(p-1)} everywhere
    rep = green_bound_check(cone(3, 0.5), 2.0)
    assert rep.min_ratio == pytest.approx(4.0, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.2, 0.99), p=st.floats(1.3, 2.7))
def test_green_lower_bound_on_smoothed_cones(a, p):
    assert green_bound_check(smoothed_cone(3, a), p, num=21).min_ratio >= 1.0 - 1e-10


def test_li_yau_constants_on_flat_ball():
    sol = solve_radial(euclidean(3), 2.0, 2.0)
    C1, C2, grad = li_yau_check(sol)
    assert C1 == pytest.approx(2.0, rel=1e-10) and C2 == pytest.approx(2.0, rel=1e-10)
    # |u'| u^{-2} = 1/r0 on the flat ball
    assert grad == pytest.approx(0.5, rel=1e-10)


def test_monotone_quantities_constant_on_flat_ball():
    n, p = 3, 1.8
    sol = solve_radial(euclidean(n), p, 1.0)
    for beta in (beta_threshold(n, p) * 1.01, 1 / (p - 1), 2.0):
        vals = [f_beta_radial(sol, beta, t) for t in (1.0, 2.0, 5.0)]
        assert np.ptp(vals) / vals[0] < 1e-10
    assert f_infty_radial(sol, 3.0) == pytest.approx(f_infty_radial(sol, 1.0), rel=1e-10)


def test_p_to_one_limit_is_area_ratio():
    for prof, r0 in ((euclidean(3), 1.0), (cone(3, 0.5), 2.0), (capped_cone(3, 0.5, 0.5), 1.0)):
        lim = p_to_one_limit(prof, r0)
        assert lim.value == pytest.approx(float(prof.h(r0)) ** 2, rel=1e-6)
    lim = p_to_one_limit(smoothed_cone(3, 0.5), 1.0)
    assert lim.value == pytest.approx(float(smoothed_cone(3, 0.5).h(1.0)) ** 2, rel=1e-3)


def test_richardson_rules():
    # log-affine data is reproduced exactly
    ps = [1.2, 1.1, 1.05]
    ext = richardson_to_one(ps, [2.0 * math.exp(0.3 * (p - 1)) for p in ps])
    assert ext.value == pytest.approx(2.0, rel=1e-13) and ext.fit_residual < 1e-13
    with pytest.raises(ExtrapolationDiverged):
        p_to_one_limit(euclidean(3), 1.0, (1.05, 1.1))
    with pytest.raises(ExtrapolationDiverged):
        richardson_to_one([1.4, 1.3, 1.2, 1.1], [1.0, 1.0, 1.0, 5.0])


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.2, 1.0), p=st.floats(1.2, 2.8), r0=st.floats(0.2, 5.0))
def test_capacity_grows_with_radius_and_never_beats_flat(a, p, r0):
    prof = smoothed_cone(3, a)
    c = normalised_capacity(prof, p, r0)
    assert c <= r0 ** (3 - p) * (1 + 1e-10)
    assert normalised_capacity(prof, p, 1.1 * r0) > c
