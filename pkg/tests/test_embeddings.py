import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contact_blender import embeddings as emb
from contact_blender.errors import DomainError


def test_disk_identity_unit_a():
    assert emb.disk_neighborhood_identity(1.0, 1000, seed=0) <= 1e-10


def test_disk_radius_example():
    for a in (0.5, 1.0, 3.0):
        fmap, _ = emb.disk_map(a)
        img = fmap(np.array([[-2 * math.pi * a / 4, 0.25, 1.0]]))
        np.testing.assert_allclose(img, [[0.5, math.pi / 2, 1.0]], atol=1e-15)


def test_disk_jacobian_finite_differences():
    fmap, jac = emb.disk_map(1.5)
    p = np.array([[-3.0, 0.3, 0.2], [-0.5, 0.9, 4.0]])
    h = 1e-7
    fd = np.stack([(fmap(p + h * e) - fmap(p - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
    np.testing.assert_allclose(jac(p), fd, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.05, 20.0), seed=st.integers(0, 2 ** 20))
def test_disk_identity_any_a(a, seed):
    assert emb.disk_neighborhood_identity(a, 200, seed) <= 1e-9 * max(1.0, a)


def test_disk_domain():
    fmap, _ = emb.disk_map(1.0)
    with pytest.raises(DomainError):
        fmap(np.array([[0.1, 0.0, 0.0]]))
    with pytest.raises(DomainError):
        fmap(np.array([[-7.0, 0.0, 0.0]]))
    with pytest.raises(ValueError):
        emb.disk_neighborhood_identity(0.0)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_cosphere_stages(a):
    res = emb.cosphere_chain_identity(a, 1000, seed=1)
    assert set(res) == {"kappa", "jmath", "twist", "polar", "composite", "chain"}
    for stage, v in res.items():
        assert v <= 1e-9, stage


def test_cosphere_stage_jacobians():
    m = emb.cosphere_maps(1.0)
    rng = np.random.default_rng(2)
    pts = {"kappa": np.column_stack([rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5), rng.uniform(0, 6, 5)]),
           "jmath": np.column_stack([rng.uniform(-3, -0.5, 5), rng.uniform(-1, 1, 5), rng.uniform(0, 6, 5)]),
           "twist": rng.uniform(-1, 1, (5, 3)),
           "polar": np.column_stack([rng.uniform(0.1, 1, 5), rng.uniform(0, 6, 5), rng.uniform(0, 6, 5)])}
    h = 1e-7
    for name, p in pts.items():
        f, fj = m[name][:2]
        fd = np.stack([(f(p + h * e) - f(p - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
        np.testing.assert_allclose(fj(p), fd, atol=1e-6, err_msg=name)


def test_polar_scale_is_sqrt_a():
    # the unit circle in (r, theta) lands on a circle of radius sqrt(a) around (s0, t0)
    m = emb.cosphere_maps(4.0)
    img = m["polar"][0](np.array([[1.0, 0.0, 0.0], [1.0, math.pi / 2, 0.0]]))
    np.testing.assert_allclose(img[:, :2], [[m["s0"] + 2.0, m["t0"]], [m["s0"], m["t0"] + 2.0]], atol=1e-15)


def test_cosphere_domains():
    m = emb.cosphere_maps(1.0)
    with pytest.raises(DomainError):
        m["jmath"][0](np.array([[0.5, 0.0, 0.0]]))
    with pytest.raises(DomainError):
        m["polar"][0](np.array([[0.0, 0.0, 0.0]]))
    with pytest.raises(ValueError):
        emb.cosphere_chain_identity(-1.0)
