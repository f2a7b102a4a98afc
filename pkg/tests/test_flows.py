import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contact_blender import chart as ch
from contact_blender.chart import ChartParams
from contact_blender.errors import ConfigError, FlowRangeError
from contact_blender.flows import HamiltonianFlow, ProfileH, default_flow

L = 0.5


def test_profile_values():
    prof = ProfileH(L)
    assert prof.h(L / 4) == L / 4
    assert prof.h(3 * L / 4) == pytest.approx(L / 4, abs=1e-15)
    assert prof.h(L / 2) == pytest.approx(L / 3 + L / 12, abs=1e-15)


@pytest.mark.parametrize("blend", ["quadratic", "sine"])
def test_profile_constraints(blend):
    prof = ProfileH(L, blend)
    t = np.linspace(0, L, 20001)[1:-1]
    assert np.all(prof.h(t) > 0)
    assert np.max(np.abs(prof.h_prime(t))) <= 1.0 < 1 / L
    # h_prime is the derivative of h: compare with central differences away from the junctions
    tt = t[(np.abs(t - L / 3) > 1e-4) & (np.abs(t - 2 * L / 3) > 1e-4)]
    fd = (prof.h(tt + 1e-7) - prof.h(tt - 1e-7)) / 2e-7
    np.testing.assert_allclose(prof.h_prime(tt), fd, atol=1e-6)
    # C1 at the junctions
    for a in (L / 3, 2 * L / 3):
        assert abs(prof.h(a + 1e-12) - prof.h(a - 1e-12)) < 1e-11
        assert abs(prof.h_prime(a + 1e-9) - prof.h_prime(a - 1e-9)) < 1e-7


def test_scalar_profile_matches_vector():
    prof = ProfileH(L)
    for t in np.linspace(-0.05, 0.55, 61):
        assert prof.h_scalar(float(t)) == pytest.approx(prof.h(t), abs=1e-15)


def test_psi_examples(flow):
    assert flow.psi(0.7, 0.0) == 0.0
    assert flow.psi(0.2, 0.1) == pytest.approx(math.exp(0.2) * 0.1, abs=1e-15)


def test_psi_and_f_step_halving(flow):
    a_psi, a_logf = flow.rk4(0.3, 0.2, step=1e-4)
    b_psi, b_logf = flow.rk4(0.3, 0.2, step=1e-5)
    assert abs(a_psi - b_psi) <= 1e-10
    assert abs(math.exp(a_logf) - math.exp(b_logf)) <= 1e-10
    # the piecewise evaluator agrees with the integrator
    assert flow.psi(0.3, 0.2) == pytest.approx(float(b_psi), abs=1e-10)
    assert flow.f(0.3, 0.2) == pytest.approx(math.exp(float(b_logf)), abs=1e-10)


def test_f_end_ranges(flow):
    # f solves df/dr = +h'(psi) f for the field h d/dt + h' s d/ds (see decisions ledger)
    assert flow.f(0.2, 0.05) == pytest.approx(math.exp(0.2), abs=1e-14)
    assert flow.f(0.2, 0.45) == pytest.approx(math.exp(-0.2), abs=1e-14)


def test_phi_examples(flow):
    Q = ch.special_point("Q")
    np.testing.assert_array_equal(flow.phi_H(0.3, Q), Q)
    lower = flow.phi_H(0.1, np.array([1.0, 0.1, 0.05]))
    np.testing.assert_allclose(lower, [math.exp(0.1), 0.1 * math.exp(0.1), 0.05], atol=1e-14)
    upper = flow.phi_H(0.1, np.array([1.0, 0.4, 0.05]))
    np.testing.assert_allclose(upper, [math.exp(-0.1), 0.5 - 0.1 * math.exp(-0.1), 0.05], atol=1e-14)
    assert upper[2] == 0.05


def test_range_error(flow):
    with pytest.raises(FlowRangeError) as info:
        flow.psi(1.0, -0.04)
    # leaves [-delta, L + delta] when 0.04 e^r = 0.05
    assert info.value.exit_time == pytest.approx(math.log(0.05 / 0.04), rel=1e-6)


def test_methods_agree(flow):
    t = np.linspace(0.0, L, 201)
    for r in (-0.4, 0.05, 0.3, 0.9):
        a, la, _ = flow.flow(r, t, "rk4")
        b, lb, _ = flow.flow(r, t, "auto")
        c, lc, _ = flow.flow(r, t, "fast")
        assert np.max(np.abs(a - b)) <= 1e-9 and np.max(np.abs(la - lb)) <= 1e-9
        assert np.max(np.abs(b - c)) <= 1e-9 and np.max(np.abs(lb - lc)) <= 1e-9


points = st.tuples(st.floats(-2, 2), st.floats(0, L), st.floats(-0.2, 0.2))


@settings(max_examples=60, deadline=None)
@given(p=points, r1=st.floats(-0.3, 0.3), r2=st.floats(-0.3, 0.3))
def test_flow_property(p, r1, r2):
    fl = default_flow()
    x = np.array(p)
    direct = fl.phi_H(r1 + r2, x, "fast")
    composed = fl.phi_H(r1, fl.phi_H(r2, x, "fast"), "fast")
    np.testing.assert_allclose(direct, composed, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0, L), r=st.floats(-0.5, 0.5))
def test_psi_monotone_in_t(t, r):
    fl = default_flow()
    dt = 1e-6
    assert fl.psi(r, min(t + dt, L), "fast") >= fl.psi(r, t, "fast")


def test_kernel_preserved(flow):
    rng = np.random.default_rng(0)
    pts = ChartParams().pack(rng.uniform(-2, 2, (1000, 1)), rng.uniform(0, L, 1000), rng.uniform(-0.2, 0.2, (1000, 1)))
    for r in (0.02, 0.1, 0.5):
        res = ch.kernel_residual(lambda p: flow.phi_H(r, p), lambda p: flow.phi_H_jacobian(r, p), pts)
        assert res <= 1e-8


def test_jacobian_matches_finite_differences(flow):
    rng = np.random.default_rng(1)
    pts = ChartParams().pack(rng.uniform(-1, 1, (50, 1)), rng.uniform(0.01, L - 0.01, 50), 0.0)
    J = flow.phi_H_jacobian(0.2, pts, "fast")
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (flow.phi_H(0.2, pts + e, "fast") - flow.phi_H(0.2, pts - e, "fast")) / (2 * h)
        np.testing.assert_allclose(J[:, :, k], fd, atol=1e-6)


def test_vector_field_first_order(flow):
    rng = np.random.default_rng(2)
    p = ChartParams().pack(rng.uniform(-1, 1, (100, 1)), rng.uniform(0.0, L, 100), 0.0)
    prof = flow.profile
    H = lambda q: prof.h(q[:, 1])
    dH = lambda q: np.column_stack([np.zeros(len(q)), prof.h_prime(q[:, 1]), np.zeros(len(q))])
    V = ch.contact_vector_field(H, dH, p)
    errs = [np.max(np.abs((flow.phi_H(eps, p) - p) / eps - V)) for eps in (1e-3, 1e-4)]
    assert errs[1] < errs[0] / 5
    assert errs[1] < 1e-3


def test_flow_config_errors():
    with pytest.raises(ConfigError):
        ProfileH(0.5, "cubic")
    with pytest.raises(ConfigError):
        HamiltonianFlow(ProfileH(0.4), ChartParams(L=0.5))
    with pytest.raises(ConfigError):
        HamiltonianFlow(step=-1.0)
