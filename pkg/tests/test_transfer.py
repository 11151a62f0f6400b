import numpy as np
import pytest
from boxmg import manifold as mf
from boxmg import transfer as tr


def test_shapes_and_index_sets():
    h = tr.GridHierarchy((6, 8))
    assert h.coarse_shape == (3, 4)
    both = np.concatenate([h.coarse_index, h.fine_only_index()])
    assert sorted(both.tolist()) == list(range(48))
    assert h.coarse_index.tolist()[:4] == [0, 2, 4, 6]


@pytest.mark.parametrize("shape", [(5, 4), (4, 7), (1, 2)])
def test_odd_or_tiny_grids_rejected(shape):
    with pytest.raises(ValueError):
        tr.GridHierarchy(shape)


def test_weights_are_valid_weight_sets():
    h = tr.GridHierarchy((8, 8))
    for j in h.fine_only_index():
        idx, w = h.neighborhood(j)
        assert np.all(w > 0) and abs(w.sum() - 1) < 1e-12
        assert len(idx) in (1, 2, 4)


def test_bilinear_stencil_of_a_corner_delta():
    h = tr.GridHierarchy((4, 4))
    delta = np.zeros(4)
    delta[0] = 1.0
    expected = np.array([[1.0, 0.5, 0.0, 0.0],
                         [0.5, 0.25, 0.0, 0.0],
                         [0.0, 0.0, 0.0, 0.0],
                         [0.0, 0.0, 0.0, 0.0]])
    assert np.array_equal(tr.interp_apply(h, delta).reshape(4, 4), expected)
    # interior coarse point: full 3x3 stencil, boundary column collapses
    h = tr.GridHierarchy((6, 6))
    delta = np.zeros(9)
    delta[4] = 1.0
    out = tr.interp_apply(h, delta).reshape(6, 6)
    assert out[1:4, 1:4].tolist() == [[0.25, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 0.25]]
    assert out[2, 5] == 0.0 and out[1, 5] == 0.0
    delta = np.zeros(9)
    delta[5] = 1.0  # coarse (1, 2), next to the last fine column
    out = tr.interp_apply(h, delta).reshape(6, 6)
    assert out[2, 5] == 1.0 and out[3, 5] == 0.5


def test_interp_partition_of_unity_and_transpose(rng):
    h = tr.GridHierarchy((10, 8))
    assert np.allclose(tr.interp_apply(h, np.full(h.n_coarse, 0.3)), 0.3, rtol=0, atol=1e-15)
    a, b = rng.standard_normal(h.n_coarse), rng.standard_normal(h.n_fine)
    assert np.dot(tr.interp_apply(h, a), b) == pytest.approx(np.dot(a, tr.interp_transpose(h, b)), rel=1e-13)


def test_prolong_examples():
    h = tr.GridHierarchy((4, 4))
    assert np.allclose(tr.prolong(h, np.full(4, 0.37)), 0.37, rtol=0, atol=1e-15)
    assert np.array_equal(tr.prolong(h, np.full(4, 0.5)), np.full(16, 0.5))
    x = np.array([0.2, 0.8, 0.5, 0.5])  # coarse (0,0)=0.2 and (0,1)=0.8
    assert tr.prolong(h, x)[1] == pytest.approx(0.5, abs=1e-15)


def test_prolong_is_geometric_mean_of_neighbors(rng):
    h = tr.GridHierarchy((8, 6))
    x = rng.uniform(0.05, 0.95, h.n_coarse)
    y = tr.prolong(h, x)
    assert np.array_equal(y[h.coarse_index], x)
    for j in h.fine_only_index():
        idx, w = h.neighborhood(j)
        assert y[j] == pytest.approx(mf.geometric_mean(x[idx], w), rel=1e-13)


def test_prolong_stays_inside_without_clipping(rng):
    h = tr.GridHierarchy((8, 8))
    x = rng.choice([1e-6, 1 - 1e-6], h.n_coarse)
    y = tr.prolong(h, x)
    assert np.all((y >= 1e-6 - 1e-18) & (y <= 1 - 1e-6 + 1e-18))


def test_restrict_inverts_prolong_exactly(rng):
    for shape in [(2, 2), (4, 6), (16, 16)]:
        h = tr.GridHierarchy(shape)
        x = rng.uniform(1e-6, 1 - 1e-6, h.n_coarse)
        assert np.array_equal(tr.restrict(h, tr.prolong(h, x)), x)


def test_restrict_checkerboard():
    h = tr.GridHierarchy((4, 4))
    y = (np.indices((4, 4)).sum(axis=0) % 2).astype(float).ravel()
    y = np.where(y > 0, 0.9, 0.1)
    assert tr.restrict(h, y).tolist() == [0.1, 0.1, 0.1, 0.1]


def test_dprolong_examples(rng):
    h = tr.GridHierarchy((6, 6))
    x = rng.uniform(0.1, 0.9, h.n_coarse)
    u = rng.standard_normal(h.n_coarse)
    assert np.array_equal(tr.dprolong(h, x, u)[h.coarse_index], u)
    assert not np.any(tr.dprolong(h, x, np.zeros(h.n_coarse)))
    half = np.full(h.n_coarse, 0.5)
    assert np.allclose(tr.dprolong(h, half, u), tr.interp_apply(h, u), rtol=0, atol=1e-15)


def test_dprolong_matches_closed_form(rng):
    h = tr.GridHierarchy((6, 8))
    x = rng.uniform(0.1, 0.9, h.n_coarse)
    u = rng.standard_normal(h.n_coarse)
    got = tr.dprolong(h, x, u)
    for j in h.fine_only_index():
        idx, w = h.neighborhood(j)
        m = mf.geometric_mean(x[idx], w)
        expect = m * (1 - m) * np.sum(w * u[idx] / (x[idx] * (1 - x[idx])))
        assert got[j] == pytest.approx(expect, rel=1e-12)


def test_restrict_tangent_at_center_is_transpose(rng):
    h = tr.GridHierarchy((4, 4))
    v = rng.standard_normal(16)
    y = np.full(16, 0.5)
    assert np.allclose(tr.restrict_tangent(h, y, v), tr.interp_transpose(h, v), rtol=0, atol=1e-15)
    assert not np.any(tr.restrict_tangent(h, y, np.zeros(16)))


def test_tangent_restrictor_closure(rng):
    h = tr.GridHierarchy((8, 8))
    y = rng.uniform(0.1, 0.9, 64)
    v = rng.standard_normal(64)
    assert np.array_equal(tr.tangent_restrictor(h, y)(v), tr.restrict_tangent(h, y, v))


def test_adjointness_small(rng):
    h = tr.GridHierarchy((4, 4))
    for _ in range(20):
        y = rng.uniform(0.01, 0.99, 16)
        x = tr.restrict(h, y)
        u, v = rng.standard_normal(4), rng.standard_normal(16)
        lhs = mf.inner(x, u, tr.restrict_tangent(h, y, v))
        rhs = mf.inner(y, tr.dprolong(h, x, u), v)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))


def test_shape_mismatch():
    h = tr.GridHierarchy((4, 4))
    for fn, arg in [(tr.prolong, np.full(5, 0.5)), (tr.restrict, np.full(4, 0.5))]:
        with pytest.raises(ValueError):
            fn(h, arg)
