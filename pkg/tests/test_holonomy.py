import numpy as np
import pytest

from contact_blender import holonomy as hol
from contact_blender.errors import DomainError


@pytest.mark.parametrize("r", [0.02, 0.05])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_holonomy_identity(model, r, k):
    L = model.chart.L
    img = hol.holonomy_map(model, np.array([0.0, L - k * r, 0.0]), r).image
    np.testing.assert_allclose(img, [1.0, r - k * r, 0.0], atol=1e-4)


def test_matches_closed_form_on_source_slab(model):
    r = 0.05
    pairs = hol.sample_pairs(model, r, 20, seed=1)
    for x, _ in pairs:
        img = hol.holonomy_map(model, x, r).image
        np.testing.assert_allclose(img, hol.holonomy_closed_form(model, x, r), atol=1e-10)
        assert abs(img[0] - 1.0) <= 1e-3
        assert abs(img[1] - (r + x[1] - model.chart.L)) <= 1e-12


def test_leaf_on_gamma_is_flat(model):
    p = np.array([0.0, 0.3, 0.01])
    disk, cert = hol.unstable_leaf(model, p, 0.02, 0.05)
    assert np.max(np.abs(disk.offsets)) <= 1e-12
    assert cert.discrepancy <= 1e-8


def test_leaf_depth_discrepancy(model):
    p = np.array([1e-9, 0.2, 0.001])  # the backward orbit must survive 21 steps of s-growth
    a, _ = hol.unstable_leaf(model, p, 0.01, 0.05, depth=20)
    b, _ = hol.unstable_leaf(model, p, 0.01, 0.05, depth=21)
    gap = np.max(np.abs(a.offsets - b.offsets))
    diam = 2 * 0.01
    assert gap <= model.params.mu ** -20 * diam + 1e-15


def test_leaf_equivariance(model):
    r = 0.05
    p = np.array([1e-7, 0.2, 0.002])
    leaf, _ = hol.unstable_leaf(model, p, 0.004, r, adaptive=True)
    q = model.chart_step(p, r)
    leaf_q, _ = hol.unstable_leaf(model, q, 0.02, r, adaptive=True)
    pts = np.column_stack([leaf.center + leaf.offsets, leaf.u_grid])
    img = model.chart_step(pts, r)
    on_q = leaf_q.center + leaf_q.offsets_at(img[:, 2])
    # linear interpolation along the leaf; leaves here are straight lines
    assert np.max(np.abs(img[:, :2] - on_q)) <= 1e-8


def test_holder_on_flat_pairs(model):
    r = 0.05
    L = model.chart.L
    rng = np.random.default_rng(2)
    pairs = []
    for _ in range(30):
        x = np.array([0.0, rng.uniform(L - 2 * r, L), 0.0])
        y = x + np.array([0.0, rng.uniform(-0.01, 0.01), 0.0])
        y[1] = np.clip(y[1], L - 2 * r, L)
        pairs.append((x, y))
    assert hol.estimate_holder(model, pairs, r) == pytest.approx(1.0, abs=1e-3)


def test_holder_stable_under_shrinking(model):
    r = 0.05
    pairs = hol.sample_pairs(model, r, 100, seed=3)
    k1 = hol.estimate_holder(model, pairs, r)
    half = [(x, x + 0.5 * (y - x)) for x, y in pairs]
    k2 = hol.estimate_holder(model, half, r)
    assert 0 < k1 <= 1
    assert k2 >= k1 - 1e-3
    # the holonomy contracts distances, so the uncapped log ratio is at least one
    assert hol.estimate_holder(model, pairs, r, raw=True) >= 1 - 1e-12


def test_composition_through_intermediate_transversal(model):
    r = 0.05
    nb = model.params.block_units
    x = np.array([0.0, model.chart.L - 0.5 * r, 0.0])
    a = hol.holonomy_map(model, x, r).image
    for extra in (1, 3, 5):
        b = hol.holonomy_map(model, x, r, back=nb + extra).image
        np.testing.assert_allclose(a, b, atol=1e-6)


def test_source_must_lie_on_transversal(model):
    with pytest.raises(DomainError):
        hol.holonomy_map(model, np.array([0.0, 0.1, 0.0]), 0.05)
    with pytest.raises(DomainError):
        hol.holonomy_map(model, np.array([0.0, 0.45, 0.01]), 0.05)
    with pytest.raises(ValueError):
        hol.holonomy_map(model, np.array([0.0, 0.45, 0.0]), 0.05, back=1)
    with pytest.raises(ValueError):
        hol.estimate_holder(model, [(np.zeros(3), np.zeros(3))], 0.05)
