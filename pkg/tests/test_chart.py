import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from contact_blender import chart as ch
from contact_blender.chart import ChartParams, ChartPoint, Tangent
from contact_blender.errors import ConfigError, DomainError
from contact_blender.flows import ProfileH

finite = st.floats(-5, 5, allow_nan=False)
vec3 = arrays(np.float64, 3, elements=finite)


def e(i, d=3):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def test_alpha_examples():
    Q = ch.special_point("Q")
    assert ch.alpha_eval(Q, e(1)) == 1.0
    assert ch.alpha_eval(np.array([2.0, 0.3, 0.1]), e(2)) == -2.0
    assert ch.alpha_eval(np.array([0.7, 0.2, -0.4]), e(0)) == 0.0


def test_alpha_higher_dimension():
    p = np.array([2.0, -1.0, 0.5, 0.0, 0.0])
    assert ch.alpha_eval(p, np.array([0, 0, 0, 1.0, 0])) == -2.0
    assert ch.alpha_eval(p, np.array([0, 0, 0, 0, 1.0])) == 1.0


def test_reeb_field():
    Q = ch.special_point("Q")
    np.testing.assert_array_equal(ch.reeb_field(Q), [0.0, 1.0, 0.0])
    p = np.array([1.3, 0.2, -0.1])
    assert ch.dalpha_eval(p, ch.reeb_field(p), e(0)) == 0.0
    assert ch.alpha_eval(p, ch.reeb_field(p)) == 1.0


def test_named_points_and_views():
    np.testing.assert_array_equal(ch.special_point("P", L=0.5), [0, 0.5, 0])
    np.testing.assert_array_equal(ch.special_point("b", tau=0.1), [1, 0.1, 0])
    with pytest.raises(ValueError):
        ch.special_point("Z")
    pt = ChartPoint(np.array([1.0]), 0.2, np.array([0.0]))
    v = Tangent(np.array([0.0]), 0.0, np.array([1.0]))
    assert ch.alpha(pt, v) == -1.0
    assert (2.0 * v + v).norm() == pytest.approx(3.0)


def test_verify_strict_contact_examples():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (500, 3))
    vecs = rng.normal(size=(500, 3))
    ident = lambda p: p
    eye = lambda p: np.broadcast_to(np.eye(3), p.shape[:-1] + (3, 3))
    assert ch.verify_strict_contact(ident, eye, pts, vecs, 1e-12) == (True, 0.0)

    J = np.diag([0.5, 1.0, 2.0])
    ok, res = ch.verify_strict_contact(lambda p: p @ J, lambda p: np.broadcast_to(J, p.shape[:-1] + (3, 3)),
                                       pts, vecs, 1e-12)
    assert ok and res <= 1e-12

    shift = lambda p: p + np.array([1.0, 0.0, 0.0])
    ok, res = ch.verify_strict_contact(shift, eye, pts, vecs, 1e-12)
    assert not ok
    assert res == pytest.approx(np.max(np.abs(vecs[:, 2])), rel=1e-12)


def test_verify_strict_contact_domain_error():
    cp = ChartParams()
    pts = np.array([[0.0, 0.1, 0.0], [0.0, 0.2, 0.0]])
    far = lambda p: p + np.array([0.0, 0.0, 10.0])
    eye = lambda p: np.broadcast_to(np.eye(3), p.shape[:-1] + (3, 3))
    with pytest.raises(DomainError) as info:
        ch.verify_strict_contact(far, eye, pts, np.ones((2, 3)), 1e-10, params=cp)
    assert info.value.index == 0


def test_contact_vector_field_of_profile():
    prof = ProfileH(0.5)
    rng = np.random.default_rng(1)
    p = np.column_stack([rng.uniform(-3, 3, 200), rng.uniform(0, 0.5, 200), rng.uniform(-0.2, 0.2, 200)])
    H = lambda q: prof.h(q[:, 1])
    dH = lambda q: np.column_stack([np.zeros(len(q)), prof.h_prime(q[:, 1]), np.zeros(len(q))])
    V = ch.contact_vector_field(H, dH, p)
    expect = np.column_stack([prof.h_prime(p[:, 1]) * p[:, 0], prof.h(p[:, 1]), np.zeros(len(p))])
    np.testing.assert_allclose(V, expect, atol=1e-12)


def test_constant_hamiltonian_gives_reeb():
    p = np.random.default_rng(2).uniform(-1, 1, (50, 3))
    V = ch.contact_vector_field(lambda q: np.ones(len(q)), lambda q: np.zeros_like(q), p)
    np.testing.assert_array_equal(V, ch.reeb_field(p))


def test_contact_vector_field_defining_equations():
    # H = u_1 at a = (1, 0, 0); check both defining equations independently
    p = np.array([[1.0, 0.0, 0.0]])
    H = lambda q: q[:, 2]
    dH = lambda q: np.tile([0.0, 0.0, 1.0], (len(q), 1))
    V = ch.contact_vector_field(H, dH, p)[0]
    assert abs(ch.alpha_eval(p[0], V) - 0.0) <= 1e-10
    grad = dH(p)[0]
    for w in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 1.0])):  # ker alpha at s = 1
        assert ch.alpha_eval(p[0], w) == 0.0
        val = ch.dalpha_eval(p[0], V, w) + grad @ w - (grad @ ch.reeb_field(p[0])) * ch.alpha_eval(p[0], w)
        assert abs(val) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(p=vec3, v=vec3, w=vec3, a=finite, b=finite)
def test_alpha_linear(p, v, w, a, b):
    lhs = ch.alpha_eval(p, a * v + b * w)
    rhs = a * ch.alpha_eval(p, v) + b * ch.alpha_eval(p, w)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(a) + abs(b)) * 100


@settings(max_examples=50, deadline=None)
@given(p=vec3, v=vec3, w=vec3)
def test_dalpha_antisymmetric(p, v, w):
    assert ch.dalpha_eval(p, v, w) == -ch.dalpha_eval(p, w, v)
    assert ch.dalpha(p, v, v) == 0.0


@settings(max_examples=30, deadline=None)
@given(p=vec3)
def test_contact_volume_nonzero(p):
    assert ch.contact_volume(p) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(p=arrays(np.float64, 3, elements=st.floats(-3, 3)),
       grad=arrays(np.float64, 3, elements=st.floats(-2, 2)), hv=st.floats(-2, 2))
def test_solver_matches_closed_form(p, grad, hv):
    P = p[None]
    a = ch.contact_vector_field(lambda q: np.array([hv]), lambda q: grad[None], P)
    b = ch.contact_vector_field_closed_form(lambda q: np.array([hv]), lambda q: grad[None], P)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_kernel_basis_annihilated():
    p = np.random.default_rng(3).uniform(-3, 3, (100, 5))
    basis = ch.kernel_basis(p)
    assert np.max(np.abs(ch.alpha_eval(p[:, None, :], basis))) == 0.0


def test_adapted_frame_inverse():
    p = np.random.default_rng(4).uniform(-3, 3, (20, 3))
    prod = ch.adapted_frame(p) @ ch.adapted_frame_inverse(p)
    np.testing.assert_allclose(prod, np.broadcast_to(np.eye(3), prod.shape), atol=1e-15)


@pytest.mark.parametrize("field,kw", [("chart.L", {"L": 1.2}), ("chart.L", {"L": -0.5}),
                                      ("chart.n", {"n": 0}), ("chart.delta", {"delta": 0.0}),
                                      ("chart.eps_u", {"eps_u": -1.0})])
def test_chart_params_validation(field, kw):
    with pytest.raises(ConfigError) as info:
        ChartParams(**kw)
    assert info.value.field == field
