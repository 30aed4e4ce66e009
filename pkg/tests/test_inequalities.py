import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import PERTURBED, perturbed_field
from pcaplab.errors import NotConicalRegion
from pcaplab.inequalities import (CHECKS, Configuration, any_violated, boundary_mean_curvature,
                                  domain_volume, prepare, run_checks)
from pcaplab.manifold import DomainSpec, capped_cone, cone, euclidean, smoothed_cone
from pcaplab.solver_axisym import GridParams

BALL = DomainSpec(r0=1.0)
CONE_EQUALITY = {"lp_minkowski", "intermediate_minkowski_gradient", "intermediate_minkowski_holder",
                 "extended_minkowski", "minkowski_outward_minimising", "pinching_i", "pinching_ii",
                 "bg_cone"}


def verdicts(reports):
    return {r.name: r.verdict for r in reports}


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5])
def test_flat_ball_is_equality_everywhere(p):
    reps = run_checks(prepare(euclidean(3), BALL, p))
    assert len(reps) == 14
    for r in reps:
        assert r.verdict == "equality", r.name
        assert r.rigidity_class in ("cone", "euclidean_ball")
    # the classifier names the stronger rigidity
    assert reps[-6].details["classification"] == "euclidean_ball"


@pytest.mark.parametrize("p", [1.5, 2.0])
def test_ball_in_conical_end_is_cone_equality(p):
    reps = run_checks(prepare(capped_cone(3, 0.5, 0.5), BALL, p))
    v = verdicts(reps)
    assert {k for k, x in v.items() if x == "equality"} == CONE_EQUALITY
    assert all(x == "holds" for k, x in v.items() if k not in CONE_EQUALITY)
    for r in reps:
        if r.verdict == "equality":
            assert r.rigidity_class == "cone"
    assert reps[0].details["chain_residual"] == pytest.approx(0.0, abs=1e-15)


def test_ball_at_cone_tip_degenerates_to_flat_equalities():
    # a ball centred at the vertex of an exact cone is a rescaled flat ball, so
    # the volumetric and iso-capacitary checks saturate too
    v = verdicts(run_checks(prepare(cone(3, 0.5), BALL, 2.0), ["volumetric_minkowski",
                                                                "iso_p_capacitary"]))
    assert v["volumetric_minkowski"] == "equality" and v["iso_p_capacitary"] == "equality"


def test_strict_off_the_rigid_models():
    reps = run_checks(prepare(smoothed_cone(3, 0.5), BALL, 2.0), [k for k in CHECKS if k != "bg_cone"])
    assert all(r.verdict == "holds" for r in reps)
    with pytest.raises(NotConicalRegion):
        run_checks(prepare(smoothed_cone(3, 0.5), BALL, 2.0), ["bg_cone"])


def test_intermediate_chain_composes():
    cfg = prepare(smoothed_cone(3, 0.6), BALL, 1.7)
    grad, holder = CHECKS["intermediate_minkowski"](cfg)
    lp = CHECKS["lp_minkowski"](cfg)[0]
    assert grad.details["composed_margin"] == pytest.approx(lp.margin, rel=1e-12)
    assert lp.margin >= grad.margin - 1e-15 and lp.margin >= holder.margin - 1e-15


def test_report_serialisation():
    rep = CHECKS["lp_minkowski"](prepare(euclidean(3), BALL, 2.0))[0]
    d = rep.to_dict()
    assert set(d) >= {"name", "lhs", "rhs", "margin", "relative_margin", "verdict",
                      "rigidity_class", "provenance"}
    assert d["provenance"]["solver"] == "radial"


def test_boundary_geometry_of_perturbed_ball():
    theta = np.linspace(0.0, math.pi, 7)
    # a round sphere in flat space, entered as a degenerate perturbation
    H = boundary_mean_curvature(euclidean(3), DomainSpec(r0=2.0), theta)
    assert np.allclose(H, 1.0)
    vol = domain_volume(euclidean(3), PERTURBED)
    # |Omega| = (2 pi / 3) int_0^pi R^3 sin, R = 1 + 0.1 cos 2 theta
    exact = 2 * math.pi / 3 * (2 + 3 * 0.1 * (-2 / 3) + 3 * 0.01 * (14 / 15) + 0.001 * (-18 / 35))
    assert vol == pytest.approx(exact, rel=1e-12)


def test_field_configuration_on_flat_perturbed_ball():
    cfg = Configuration(euclidean(3), PERTURBED, 2.0, GridParams(128, 48),
                        field_=perturbed_field(2.0, 128, 48))
    names = [k for k in CHECKS if k not in ("extended_minkowski", "bg_cone")]
    reps = run_checks(cfg, names)
    assert not any_violated(reps)
    v = verdicts(reps)
    # Green's function only sees the flat background
    assert v["green_lower_bound"] == "equality"
    for k in ("lp_minkowski", "minkowski_outward_minimising", "volumetric_minkowski",
              "iso_p_capacitary"):
        assert v[k] == "holds", k
    assert reps[0].details["H_field_gap"] < 1e-2


@settings(max_examples=8, deadline=None)
@given(a=st.floats(0.2, 0.95), p=st.floats(1.3, 2.2))
def test_never_violated_on_smoothed_cones(a, p):
    cfg = prepare(smoothed_cone(3, a), BALL, p)
    reps = run_checks(cfg, [k for k in CHECKS if k != "bg_cone"])
    assert not any_violated(reps)


def test_margins_continuous_in_slope():
    margins = []
    for a in (0.5, 0.5 + 1e-4):
        rep = CHECKS["lp_minkowski"](prepare(smoothed_cone(3, a), BALL, 2.0))[0]
        margins.append(rep.relative_margin)
    assert abs(margins[1] - margins[0]) < 1e-3
