"""Distance field, position selection, and scattered interpolation.

The scipy-backed pieces (EDT, Delaunay) are checked against brute-force
oracles small enough to be obviously correct.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steerkit import (
    DepthMap,
    DimensionError,
    EmptyConditionError,
    GridInterpolator,
    ParameterError,
    SparseDepth,
    distance_to_condition,
    interpolate_scattered,
    phi1,
    phi2,
    select_positions,
)


def _brute_distance(mask):
    """O(n^2) nearest-true-pixel Euclidean distance."""
    h, w = mask.shape
    pts = np.argwhere(mask)
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            d2 = (pts[:, 0] - i) ** 2 + (pts[:, 1] - j) ** 2
            out[i, j] = np.sqrt(d2.min())
    return out


def _condition_from_mask(mask, depth=2.0):
    rows, cols = np.nonzero(mask)
    return SparseDepth(
        rows, cols, np.full(rows.size, depth), mask.shape[0], mask.shape[1]
    )


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_distance_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    h, w = int(rng.integers(2, 14)), int(rng.integers(2, 14))
    mask = rng.random((h, w)) < 0.15
    if not mask.any():
        mask[int(rng.integers(h)), int(rng.integers(w))] = True
    c = _condition_from_mask(mask)
    np.testing.assert_allclose(distance_to_condition(c), _brute_distance(mask), atol=1e-9)


def test_distance_zero_at_conditions():
    mask = np.zeros((9, 9), dtype=bool)
    mask[4, 4] = True
    c = _condition_from_mask(mask)
    dist = distance_to_condition(c)
    assert dist[4, 4] == 0.0
    assert dist[4, 6] == pytest.approx(2.0)
    assert dist[1, 0] == pytest.approx(5.0)


def test_distance_requires_nonempty_condition():
    with pytest.raises(EmptyConditionError):
        distance_to_condition(
            SparseDepth(np.empty(0, int), np.empty(0, int), np.empty(0), 4, 4)
        )


# --- position selection ----------------------------------------------------


def _spread_condition(h, w, step=11):
    rows, cols = np.meshgrid(
        np.arange(0, h, step), np.arange(0, w, step), indexing="ij"
    )
    rows, cols = rows.ravel(), cols.ravel()
    return SparseDepth(rows, cols, np.full(rows.size, 3.0), h, w)


def test_select_positions_layout_and_count():
    c = _spread_condition(60, 80)
    zeta = 7.0
    pos = select_positions(c, zeta, 1.0, np.random.default_rng(0))
    assert pos.n_condition == len(c.rows)
    np.testing.assert_array_equal(pos.rows[: pos.n_condition], c.rows)
    np.testing.assert_array_equal(pos.cols[: pos.n_condition], c.cols)
    assert np.all(pos.is_condition[: pos.n_condition])
    assert not pos.is_condition[pos.n_condition :].any()
    dist = distance_to_condition(c)
    eligible = int((dist > zeta).sum())
    assert pos.n_fill == round(eligible / zeta**2)
    # every fill position sits strictly beyond zeta from the condition set
    fill_r = pos.rows[pos.n_condition :]
    fill_c = pos.cols[pos.n_condition :]
    assert np.all(dist[fill_r, fill_c] > zeta)


def test_select_positions_density_scales_count():
    c = _spread_condition(60, 80)
    rng = np.random.default_rng
    full = select_positions(c, 7.0, 1.0, rng(1)).n_fill
    half = select_positions(c, 7.0, 0.5, rng(1)).n_fill
    none = select_positions(c, 7.0, 0.0, rng(1)).n_fill
    assert none == 0
    assert 0 < half < full


def test_select_positions_deterministic_per_seed():
    c = _spread_condition(40, 40)
    a = select_positions(c, 5.0, 1.0, np.random.default_rng(9))
    b = select_positions(c, 5.0, 1.0, np.random.default_rng(9))
    np.testing.assert_array_equal(a.rows, b.rows)
    np.testing.assert_array_equal(a.cols, b.cols)


def test_select_positions_rejects_bad_parameters():
    c = _spread_condition(20, 20)
    rng = np.random.default_rng(0)
    with pytest.raises(ParameterError):
        select_positions(c, 0.0, 1.0, rng)
    with pytest.raises(ParameterError):
        select_positions(c, 7.0, -0.5, rng)


# --- scattered interpolation -----------------------------------------------


def _grid_with_corners(rng, h, w, n_extra):
    corners = np.array([[0, 0], [0, w - 1], [h - 1, 0], [h - 1, w - 1]])
    extra = np.stack(
        [rng.integers(0, h, n_extra), rng.integers(0, w, n_extra)], axis=1
    )
    pts = np.unique(np.concatenate([corners, extra]), axis=0)
    return pts[:, 0], pts[:, 1]


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_interpolation_reproduces_affine_fields(seed):
    """Barycentric interpolation is exact on planes (corner nodes pin the
    hull to the full grid, so no extrapolation is involved)."""
    rng = np.random.default_rng(seed)
    h, w = int(rng.integers(4, 20)), int(rng.integers(4, 20))
    rows, cols = _grid_with_corners(rng, h, w, 12)
    a, b, d = rng.uniform(-2, 2, 3)
    interp = GridInterpolator(rows, cols, h, w)
    got = interp(a * rows + b * cols + d)
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    np.testing.assert_allclose(got, a * rr + b * cc + d, atol=1e-6)


def test_interpolation_exact_at_nodes():
    rng = np.random.default_rng(3)
    rows, cols = _grid_with_corners(rng, 16, 16, 20)
    vals = rng.standard_normal(rows.size)
    interp = GridInterpolator(rows, cols, 16, 16)
    out = interp(vals)
    np.testing.assert_array_equal(out[rows, cols], vals)


def test_interpolation_outside_hull_takes_nearest_node():
    # nodes confined to the left half; right edge must copy its nearest node
    rows = np.array([0, 8, 15, 7])
    cols = np.array([0, 3, 0, 1])
    vals = np.array([1.0, 5.0, 9.0, 4.0])
    interp = GridInterpolator(rows, cols, 16, 16)
    out = interp(vals)
    assert out[8, 15] == vals[1]


def test_interpolation_linear_in_values():
    rng = np.random.default_rng(4)
    rows, cols = _grid_with_corners(rng, 12, 12, 10)
    interp = GridInterpolator(rows, cols, 12, 12)
    v1 = rng.standard_normal(rows.size)
    v2 = rng.standard_normal(rows.size)
    lhs = interp(2.5 * v1 - 0.5 * v2)
    rhs = 2.5 * interp(v1) - 0.5 * interp(v2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_collinear_nodes_fall_back_to_nearest():
    rows = np.array([2, 2, 2])
    cols = np.array([1, 5, 9])
    vals = np.array([1.0, 2.0, 3.0])
    out = GridInterpolator(rows, cols, 8, 12)(vals)
    assert out[2, 1] == 1.0 and out[2, 9] == 3.0
    assert out[7, 0] == 1.0  # nearest to the first node


def test_interpolate_scattered_returns_depth_map():
    c = _spread_condition(24, 24, step=6)
    pos = select_positions(c, 3.0, 1.0, np.random.default_rng(0))
    vals = np.linspace(1.0, 2.0, len(pos.rows))
    d = interpolate_scattered(pos, vals, (24, 24))
    assert isinstance(d, DepthMap)
    assert d.shape == (24, 24)


def test_interpolate_scattered_checks_value_length():
    c = _spread_condition(24, 24, step=6)
    pos = select_positions(c, 3.0, 1.0, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        interpolate_scattered(pos, np.zeros(len(pos.rows) + 1), (24, 24))


# --- phi fields ------------------------------------------------------------


def test_phi2_equals_phi1_when_condition_agrees_with_estimate():
    rng = np.random.default_rng(5)
    est = DepthMap(2.0 + rng.random((32, 32)))
    c = _spread_condition(32, 32, step=9)
    c = c.with_depths(est.values[c.rows, c.cols])
    pos = select_positions(c, 4.0, 1.0, np.random.default_rng(1))
    f1 = phi1(est, pos)
    f2 = phi2(est, c, pos)
    np.testing.assert_array_equal(f1.values, f2.values)


def test_phi2_substitutes_condition_values():
    est = DepthMap(np.full((20, 20), 5.0))
    c = _spread_condition(20, 20, step=6)
    pos = select_positions(c, 3.0, 0.0, np.random.default_rng(0))
    f2 = phi2(est, c, pos)
    # conditions all read 3.0; the interpolant through equal node values is
    # constant, so the whole field collapses to it
    np.testing.assert_allclose(f2.values, 3.0, atol=1e-12)


def test_phi2_rejects_mismatched_condition_block():
    est = DepthMap(np.full((20, 20), 5.0))
    c = _spread_condition(20, 20, step=6)
    pos = select_positions(c, 3.0, 1.0, np.random.default_rng(0))
    other = SparseDepth(
        c.rows + 1, c.cols, c.depths, c.height, c.width
    )
    with pytest.raises(DimensionError):
        phi2(est, other, pos)
