import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcaplab.errors import NotConicalRegion, StepFailure
from pcaplab.imcf import (bishop_gromov_cone_bound, evolve, flow_checks, flow_rows,
                          minkowski_ratio_series, q_series, splitting_identities_check,
                          total_mean_curvature)
from pcaplab.manifold import capped_cone, cone, euclidean, grafted, smoothed_cone, sphere_measure


def test_flat_flow_is_explicit():
    # r(t) = r0 e^{t/(n-1)} in R^n
    states = evolve(euclidean(3), 1.0, 2.0, 0.25)
    for s in states:
        assert s.r == pytest.approx(math.exp(s.t / 2), rel=1e-11)
        assert s.Q == pytest.approx(2 * math.sqrt(4 * math.pi), rel=1e-14)


def test_total_mean_curvature_matches_closed_form():
    prof = smoothed_cone(4, 0.6)
    h, dh, _ = (float(x) for x in prof.evaluate(1.3))
    expected = 3 * dh / h * sphere_measure(3) * h ** 3
    assert total_mean_curvature(prof, 1.3) == pytest.approx(expected, rel=1e-13)


def test_q_two_ways_and_monotone():
    prof = smoothed_cone(3, 0.5)
    states = evolve(prof, 0.5, 6.0, 0.1)
    chk = flow_checks(states, prof)
    assert chk.area_residual < 1e-9
    assert chk.q_agreement < 1e-12
    assert chk.q_max_increase == 0.0 and chk.q_variation > 0.1
    red, dfn = q_series(states)
    assert dfn is None and len(red) == len(states)
    ratio = minkowski_ratio_series(states, prof)
    assert np.all(ratio >= 1.0) and np.all(np.diff(ratio) < 0)


def test_q_constant_and_splitting_on_cone():
    prof = cone(3, 0.5)
    states = evolve(prof, 1.0, 3.0, 0.01)
    chk = flow_checks(states, prof)
    assert chk.q_variation < 1e-13
    res = splitting_identities_check(states, prof)
    assert res.metric < 1e-9 and res.mean_curvature < 1e-9


def test_splitting_needs_a_conical_region():
    prof = smoothed_cone(3, 0.5)
    with pytest.raises(NotConicalRegion):
        splitting_identities_check(evolve(prof, 1.0, 1.0, 0.5), prof)
    # the capped cone is conical past r1 = 0.5
    prof = capped_cone(3, 0.5, 0.5)
    res = splitting_identities_check(evolve(prof, 0.6, 2.0, 0.1), prof)
    assert max(res.metric, res.mean_curvature) < 1e-9


def test_evolve_errors_and_rows():
    with pytest.raises(StepFailure):
        evolve(euclidean(3), 0.0, 1.0, 0.1)
    with pytest.raises(StepFailure):
        evolve(euclidean(3), 1.0, 1.0, 0.0)
    states = evolve(euclidean(3), 1.0, 0.0, 0.1)
    assert len(states) == 1
    assert flow_rows(states)[0][:2] == (0.0, 1.0)


def test_bishop_gromov_cone_bound():
    for prof, r0 in ((cone(3, 0.5), 1.0), (capped_cone(3, 0.5, 0.5), 1.0), (euclidean(3), 2.0)):
        rep = bishop_gromov_cone_bound(prof, r0)
        assert abs(rep.margin) <= 1e-12 * rep.area and rep.conical_beyond
    rep = bishop_gromov_cone_bound(grafted(3, 0.5, 1.0, 3.0), 2.0)
    assert rep.margin > 0.1 * rep.area and not rep.conical_beyond
    with pytest.raises(NotConicalRegion):
        bishop_gromov_cone_bound(smoothed_cone(3, 0.5), 1.0)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.2, 1.0), r0=st.floats(0.05, 5.0), n=st.integers(3, 5))
def test_area_grows_exponentially(a, r0, n):
    prof = smoothed_cone(n, a)
    states = evolve(prof, r0, 2.0, 0.5)
    chk = flow_checks(states, prof)
    assert chk.area_residual < 1e-8
    assert chk.q_max_increase <= 1e-12 * states[0].Q
