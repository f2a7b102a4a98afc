import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import csr_matrix

from contact_blender import transitivity as tr
from contact_blender.suites import dividing_flow, reachability_verdict, transitivity_cases

CIRCLE8 = tr.BoxPartition((0.0,), (1.0,), (8,), (0,))
TORUS32 = tr.BoxPartition((0.0, 0.0), (1.0, 1.0), (32, 32), (0, 1))


def test_identity_graph_is_self_loops():
    g = tr.build_transition_graph(lambda x: x, TORUS32, samples_per_cell=4)
    A = g.adjacency.toarray()
    np.testing.assert_array_equal(A, np.eye(TORUS32.size, dtype=A.dtype))
    v = tr.is_transitive(g)
    assert v == tr.NO
    a, b = v.witness
    assert a != b


def test_cat_map_strongly_connected():
    g = tr.build_transition_graph(tr.cat_map, TORUS32, seed=1)
    assert tr.is_transitive(g) == tr.YES
    assert tr.is_mixing(g) == tr.YES
    assert g.escapes == 0


def test_quarter_rotation_cycles():
    g = tr.build_transition_graph(tr.rotation(0.25), CIRCLE8, samples_per_cell=8)
    for i in range(8):
        assert g.successors(i) == [(i + 2) % 8]
    v = tr.is_transitive(g)
    assert v == tr.NO
    # four 2-cycles {i, i+4}: every witness pair sits in different cycles
    a, b = v.witness
    assert (a - b) % 4 != 0


def test_cell_index_edges():
    part = tr.BoxPartition((0.0,), (1.0,), (4,))
    np.testing.assert_array_equal(part.cell_index(np.array([[0.0], [0.26], [0.999], [1.0], [-0.1], [np.nan]])),
                                  [0, 1, 3, -1, -1, -1])
    np.testing.assert_array_equal(CIRCLE8.cell_index(np.array([[1.0], [-0.01]])), [0, 7])
    with pytest.raises(ValueError):
        tr.BoxPartition((0.0,), (0.0,), (4,))


def test_escapes_make_verdict_inconclusive():
    part = tr.BoxPartition((0.0,), (1.0,), (8,))
    g = tr.build_transition_graph(lambda x: x + 0.3, part)
    assert g.escapes > 0
    assert tr.is_transitive(g) == tr.INCONCLUSIVE
    everything_out = tr.build_transition_graph(lambda x: x + 5.0, part)
    assert tr.is_transitive(everything_out).detail["reason"].startswith("every cell")


@pytest.mark.parametrize("label", list(transitivity_cases()))
def test_reference_cases(label):
    f, part, want_t, want_m = transitivity_cases()[label]
    g = tr.build_transition_graph(f, part, seed=0)
    assert (tr.is_transitive(g).verdict, tr.is_mixing(g).verdict) == (want_t, want_m)


def test_determinism():
    a = tr.build_transition_graph(tr.cat_map, TORUS32, seed=5)
    b = tr.build_transition_graph(tr.cat_map, TORUS32, seed=5)
    assert a.to_text() == b.to_text()
    assert tr.is_transitive(a).detail == tr.is_transitive(b).detail


def test_refinement_keeps_rotation_non_transitive():
    for k in (8, 16, 32):
        part = tr.BoxPartition((0.0,), (1.0,), (k,), (0,))
        g = tr.build_transition_graph(tr.rotation(0.25), part)
        assert tr.is_transitive(g) == tr.NO
        assert g.adjacency.nnz == k


def test_refinement_keeps_cat_transitive():
    for k in (8, 16, 32):
        part = tr.BoxPartition((0.0, 0.0), (1.0, 1.0), (k, k), (0, 1))
        assert tr.is_transitive(tr.build_transition_graph(tr.cat_map, part)) == tr.YES


def test_closure_oracle_small():
    A = csr_matrix(np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]]))
    R = tr.reachability_closure(A)
    np.testing.assert_array_equal(R, [[1, 1, 1], [0, 1, 1], [0, 0, 1]])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 30))
def test_verdict_matches_exhaustive_reachability(seed):
    rng = np.random.default_rng(seed)
    part = tr.BoxPartition((0.0,), (1.0,), (16,), (0,))
    perm = rng.permutation(16)
    jitter = rng.uniform(0, 1.0 / 16)
    f = lambda x: np.mod((perm[np.minimum((x * 16).astype(int), 15)] + (x * 16 % 1)) / 16 + jitter, 1.0)
    g = tr.build_transition_graph(f, part, seed=seed)
    assert tr.is_transitive(g).verdict == reachability_verdict(g)


def test_graph_period():
    cyc = csr_matrix(np.roll(np.eye(5, dtype=int), 1, axis=1))
    assert tr.graph_period(cyc) == 5
    cyc = cyc.tolil()
    cyc[0, 0] = 1
    assert tr.graph_period(cyc.tocsr()) == 1


def test_powers_positive():
    A = csr_matrix(np.array([[1, 1], [1, 0]]))
    assert tr.powers_positive(A, 6) == 2
    assert tr.powers_positive(csr_matrix(np.array([[0, 1], [1, 0]])), 6) is None


def test_rotation_does_not_spread():
    part = tr.BoxPartition((0.0,), (1.0,), (64,), (0,))
    g = tr.build_transition_graph(tr.rotation(tr.GOLDEN), part)
    prof = tr.spread_profile(g, 30)
    assert np.max(prof) <= 1.0
    cat = tr.build_transition_graph(tr.cat_map, TORUS32)
    assert np.max(tr.spread_profile(cat, 10)) > 2.0


def test_dividing_witness():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-0.99, 0.99, 200), rng.uniform(0, 1, 200)])
    wit, bad = tr.dividing_obstruction(dividing_flow, lambda y: y[..., 0], pts, 5.0)
    assert bad is None
    assert wit.direction == 1
    assert np.all(wit.crossings <= 1)
    assert np.all(wit.U[:, 0] > 0) and np.all(wit.V[:, 0] < 0)


def test_recrossing_declines():
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.uniform(-0.99, 0.99, 100), rng.uniform(0, 1, 100)])
    unit = lambda y: np.stack([np.ones(np.shape(y)[:-1]), np.zeros(np.shape(y)[:-1])], axis=-1)
    wit, bad = tr.dividing_obstruction(unit, lambda y: np.sin(2 * np.pi * y[..., 0]), pts, 3.0)
    assert wit is None and bad is not None


def test_dividing_input_checks():
    pts = np.column_stack([np.linspace(0.1, 0.9, 20), np.zeros(20)])
    with pytest.raises(ValueError):
        tr.dividing_obstruction(dividing_flow, lambda y: y[..., 0], pts, 1.0)
    flat = np.column_stack([np.linspace(-0.9, 0.9, 21), np.zeros(21)])  # includes y = 0
    with pytest.raises(ValueError):
        tr.dividing_obstruction(dividing_flow, lambda y: y[..., 0] ** 3, flat, 1.0)
