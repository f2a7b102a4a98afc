import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from contact_blender import chart as ch
from contact_blender import cones
from contact_blender.cones import ConeField, SumCone
from contact_blender.errors import ModelViolation

# layout (ds, dt, du) for n = 1
KU = ConeField((2,), 0.25, 3)


def test_cone_contains_examples():
    assert cones.cone_contains(KU, [0.0, 0.0, 3.0])
    assert cones.cone_contains(ConeField((2,), 0.0, 3), [0.0, 0.0, -1.0])
    assert not cones.cone_contains(KU, [1.0, 0.0, 1.0])
    assert cones.cone_contains(KU, [0.2, 0.0, 1.0])


def test_contraction_diagonal_oracle():
    J = np.diag([0.5, 1.0, 2.0])
    res = cones.check_contraction(J, KU)
    # boundary rays (c, 1) with |c| = 1/4 map to ratio |(c_s/2, c_t)| / 2, worst along dt: 1/8
    assert res.ok
    assert res.margin == pytest.approx(0.25 - 0.125, abs=1e-3)
    assert res.margin >= 0.25 - 0.125 - 1e-12  # sampled rays never exceed the supremum


def test_identity_not_strictly_contracted():
    res = cones.check_contraction(np.eye(3), KU)
    assert not res.ok
    assert res.margin == pytest.approx(0.0, abs=1e-15)


def test_expanding_complement_fails():
    res = cones.check_contraction(np.diag([2.0, 1.0, 0.5]), KU)
    assert not res.ok
    # worst ratio (1/4 * 2) / (1/2) = 1, four times the width
    assert 0.25 - res.margin == pytest.approx(1.0, abs=1e-3)


def test_dilation_on_axis():
    d = cones.dilation_constant(np.diag([0.5, 1.0, 2.0]), ConeField((2,), 0.0, 3))
    assert d.lambda_hat == pytest.approx(2.0, abs=1e-15)


def test_dilation_diagonal_oracle():
    d = cones.dilation_constant(np.diag([0.5, 1.0, 2.0]), KU)
    exact = math.sqrt((4 + 1 / 64) / (1 + 1 / 16))
    assert d.lambda_hat >= exact - 1e-12
    assert d.lambda_hat <= exact + 1e-3


def test_rotation_keeps_length_but_breaks_cone():
    R = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])  # du -> ds
    assert cones.dilation_constant(R, KU).lambda_hat == pytest.approx(1.0, abs=1e-12)
    assert not cones.check_contraction(R, KU).ok


def test_stretching_criterion_examples():
    assert cones.check_stretching_criterion(2, 0.25, math.exp(0.05), 0.0, 0.1)
    assert math.sqrt(math.exp(0.1) - 1) == pytest.approx(0.3244, abs=1e-4)
    assert not cones.check_stretching_criterion(2, 0.25, 2.0, 0.2, 0.3)
    assert cones.stretching_window(2, 2.0, 0.2)[0] == pytest.approx(0.4)
    assert not cones.check_stretching_criterion(1.1, 0.5, 2.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        cones.check_stretching_criterion(2, 0.25, 2.0, -0.1, 0.1)


pos = st.floats(0.01, 5)


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(1.01, 4), eps=st.floats(0.01, 1), nu=st.floats(1.0, 5), eta=st.floats(0, 0.99),
       delta=pos, grow=st.floats(1, 3), shrink=st.floats(0, 1))
def test_stretching_monotone(mu, eps, nu, eta, delta, grow, shrink):
    assume(nu > 1)
    if cones.check_stretching_criterion(mu, eps, nu, eta, delta):
        assert cones.check_stretching_criterion(mu, eps, nu * grow, eta, delta)
        assert cones.check_stretching_criterion(mu, eps, nu, eta * shrink, delta)
        assert cones.check_stretching_criterion(mu, max(eps * shrink, 1e-6), nu, eta, delta)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.01, 1), delta=st.floats(0.01, 1), b1=st.floats(-3, 3), b2=st.floats(-3, 3),
       c1=st.floats(-1, 1), c2=st.floats(-1, 1))
def test_sum_cone_membership_of_sums(eps, delta, b1, b2, c1, c2):
    cone = cones.kcu_cone(1, eps, delta)
    v1 = np.array([c1 * eps * abs(b1), 0.0, b1])  # member of K_eps(du) within ds + du
    v2 = np.array([c2 * delta * abs(b2), b2, 0.0])  # member of K_delta(dt) within ds + dt
    assert cones.cone_contains(cone, v1 + v2, tol=1e-12)
    p1, p2 = cone.decompose(v1 + v2)
    np.testing.assert_allclose(p1 + p2, v1 + v2, atol=1e-12)


def test_sum_cone_rejects_shared_excess():
    cone = cones.kcu_cone(1, 0.25, 0.1)
    assert not cones.cone_contains(cone, np.array([1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        SumCone(ConeField((0,), 0.1, 3), ConeField((0,), 0.1, 3))


def _chart_chain(model, p, k, r):
    mats = []
    for _ in range(k):
        q = model.chart_step(p, r)
        mats.append(ch.adapted_jacobian(p, q, model.chart_step_jacobian(p, r)))
        p = q
    return mats


def test_center_drift_pure_chart_orbit(model):
    r, k = 0.05, 3
    mats = _chart_chain(model, np.array([0.3, 0.01, 0.001]), k, r)
    nu, eta, du = cones.estimate_center_drift(mats, 1)
    assert nu == pytest.approx(math.exp(k * r), abs=1e-12)
    assert eta == 0.0 and du == 0.0


def test_center_drift_flags_du_leak():
    J = np.eye(3)
    J[2, 1] = 1e-3
    with pytest.raises(ModelViolation):
        cones.estimate_center_drift([J], 1)


def test_model_cones_near_segment(verifier, model):
    # K^u forward and K^s backward on a neighbourhood of the Reeb segment
    rng = np.random.default_rng(0)
    pts = model.chart.pack(rng.uniform(-0.2, 0.2, (500, 1)), rng.uniform(0, 0.5, 500), rng.uniform(-0.05, 0.05, (500, 1)))
    for r in (0.02, 0.1):
        Jf, _ = verifier.adapted_chart_jacobians(pts, 1, r)
        assert cones.check_contraction(Jf, KU).ok
        assert cones.dilation_constant(Jf, KU).lambda_hat >= 2 * (1 - 1e-6)
        pre, _ = model.chart_power(pts, -1, r)
        Jb = np.linalg.inv(verifier.adapted_chart_jacobians(pre, 1, r)[0])
        ks = ConeField((0,), 0.25, 3)
        assert cones.check_contraction(Jb, ks).ok
