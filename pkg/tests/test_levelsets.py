import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ball_field, perturbed_field
from pcaplab.errors import LevelOutOfRange
from pcaplab.levelsets import (area, curvatures, enclosed_volume, export_csv_rows, extract,
                               hessian_frame, integral_power, marching_squares,
                               orthogonal_decomposition_residual, umbilicity_deficit)
from pcaplab.manifold import smoothed_cone
from pcaplab.radial import solve_radial


def test_marching_squares_traces_a_circle():
    x, y = np.meshgrid(np.arange(41.0), np.arange(41.0), indexing="ij")
    values = np.hypot(x - 20.0, y - 20.0)
    lines = marching_squares(values, 10.5)
    assert len(lines) == 1
    pts = lines[0]
    assert np.allclose(np.hypot(pts[:, 0] - 20.0, pts[:, 1] - 20.0), 10.5, atol=0.05)


def test_level_of_flat_ball_is_a_round_sphere():
    f = ball_field("euclidean", 2.0)
    curve = curvatures(f, extract(f, 2.0))
    # u = 1/r, so the level 1/2 is the sphere r = 2
    assert np.allclose(curve.r, 2.0, rtol=1e-6)
    assert area(curve) == pytest.approx(16 * math.pi, rel=1e-8)
    assert np.allclose(curve.H, 1.0, rtol=1e-4)
    assert np.allclose(curve.normDu, 0.25, rtol=1e-5)
    assert umbilicity_deficit(curve) < 1e-8
    assert enclosed_volume(f, curve) == pytest.approx(32 * math.pi / 3, rel=1e-8)
    assert integral_power(curve, 1.0) == pytest.approx(4 * math.pi, rel=1e-5)


def test_level_on_smoothed_cone_matches_radial():
    f = ball_field("smoothed", 2.0)
    sol = solve_radial(smoothed_cone(3, 0.5), 2.0, 1.0)
    t = 3.0
    curve = curvatures(f, extract(f, t))
    r_t = sol.radius_of_level(t)
    assert np.allclose(curve.r, r_t, rtol=1e-5)
    h, dh, _ = (float(x) for x in sol.profile.evaluate(r_t))
    assert np.allclose(curve.H, 2 * dh / h, rtol=1e-3)
    assert np.allclose(curve.normDu, abs(sol.du(r_t)), rtol=1e-4)


@settings(max_examples=30, deadline=None)
@given(fr=st.floats(0.1, 3.0), frr=st.floats(-3.0, 3.0), r=st.floats(0.2, 5.0),
       theta=st.floats(0.05, 3.09))
def test_hessian_frame_of_radial_function(fr, frr, r, theta):
    # for phi = phi(r) the level sets are spheres: N = e_r, fibre and meridian
    # eigenvalues both equal h'/h phi_r
    prof = smoothed_cone(3, 0.6)
    h, dh, _ = (float(x) for x in prof.evaluate(r))
    G, Hnn, Hnt, Htt, Hff = hessian_frame(fr, 0.0, frr, 0.0, 0.0, h, dh, theta)
    assert G == pytest.approx(fr)
    assert Hnn == pytest.approx(frr)
    assert Hnt == pytest.approx(0.0, abs=1e-14)
    assert Htt == pytest.approx(dh / h * fr, rel=1e-12)
    assert Hff == pytest.approx(dh / h * fr, rel=1e-12)


def test_perturbed_levels_and_rows():
    f = perturbed_field(2.0, 128, 48)
    c1 = curvatures(f, extract(f, 1.0))
    c2 = curvatures(f, extract(f, 2.0))
    assert not c2.flags and c2.extra["phi_residual"] < 1e-8
    # boundary is not umbilic, farther levels round off
    assert umbilicity_deficit(c1) > 10 * umbilicity_deficit(c2)
    assert orthogonal_decomposition_residual(f, c2) < 1e-2
    cols, rows = export_csv_rows([c1, c2])
    assert cols[0] == "t" and len(rows) == len(c1.s) + len(c2.s)
    with pytest.raises(LevelOutOfRange):
        extract(f, 0.5)
    with pytest.raises(LevelOutOfRange):
        extract(f, 1e9)


def test_flux_is_level_independent_and_curvatures_consistent():
    f = perturbed_field(2.0, 128, 48)
    flux = [integral_power(extract(f, t), 1.0) for t in (1.0, 2.0, 3.0, 5.0)]
    assert np.ptp(flux) / flux[0] < 5e-3
    for t in (1.0, 2.0, 4.0):
        c = curvatures(f, extract(f, t))
        # n = 3: one meridian and one parallel principal curvature
        assert np.max(np.abs(c.H - c.kappa_m - c.kappa_par)) <= 1e-2 * np.max(np.abs(c.H))
