"""Distance fields, steering sample positions, and scattered interpolation.

The steering direction is built from two piecewise-linear interpolants over
the same scattered positions P (condition points plus random fill), so the
Delaunay triangulation and per-pixel barycentric weights are computed once
per P in :class:`GridInterpolator` and reused for every set of values.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import DimensionError, EmptyConditionError, ParameterError
from .types import DepthMap, SamplingPositions, SparseDepth

__all__ = [
    "distance_to_condition",
    "select_positions",
    "GridInterpolator",
    "interpolate_scattered",
    "phi1",
    "phi2",
]


def distance_to_condition(c: SparseDepth) -> np.ndarray:
    """Exact Euclidean distance (in pixels) from every cell to the nearest
    condition position."""
    if len(c) == 0:
        raise EmptyConditionError("distance field needs at least one condition point")
    return ndimage.distance_transform_edt(~c.mask)


def select_positions(
    c: SparseDepth,
    zeta: float,
    fill_density: float,
    rng: np.random.Generator,
) -> SamplingPositions:
    """Union of all condition positions and random fill positions.

    Fill positions are drawn uniformly (without replacement) from cells whose
    distance to the nearest condition point exceeds ``zeta``; their expected
    count is ``fill_density`` per ``zeta x zeta`` cell of that eligible
    region.  Deterministic for a given generator state.
    """
    if zeta <= 0:
        raise ParameterError(f"zeta must be positive, got {zeta}")
    if fill_density < 0:
        raise ParameterError(f"fill_density must be >= 0, got {fill_density}")
    dist = distance_to_condition(c)
    eligible = np.flatnonzero((dist > zeta).ravel())
    n_fill = int(round(fill_density * eligible.size / (zeta * zeta)))
    n_fill = min(n_fill, eligible.size)
    if n_fill > 0:
        chosen = rng.choice(eligible, size=n_fill, replace=False)
        chosen.sort()
        fill_rows, fill_cols = np.divmod(chosen, c.width)
    else:
        fill_rows = fill_cols = np.empty(0, dtype=np.intp)
    rows = np.concatenate([c.rows, fill_rows])
    cols = np.concatenate([c.cols, fill_cols])
    is_cond = np.zeros(len(rows), dtype=bool)
    is_cond[: len(c)] = True
    return SamplingPositions(rows, cols, is_cond, c.height, c.width)


class GridInterpolator:
    """Piecewise-linear interpolation of scattered node values onto a grid.

    Inside the convex hull of the nodes the value is the barycentric-linear
    interpolant over the Delaunay triangulation; outside it is the value of
    the nearest node.  Node cells always reproduce their own value exactly.
    Construction cost is paid once; evaluation per value set is a gather.
    """

    def __init__(self, rows: np.ndarray, cols: np.ndarray, height: int, width: int):
        rows = np.asarray(rows, dtype=np.float64)
        cols = np.asarray(cols, dtype=np.float64)
        if rows.size == 0:
            raise EmptyConditionError("interpolation needs at least one position")
        self.height, self.width = height, width
        self.n_nodes = rows.size
        self._node_flat = (rows.astype(np.intp) * width + cols.astype(np.intp))
        points = np.stack([rows, cols], axis=1)
        gr, gc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        grid = np.stack([gr.ravel(), gc.ravel()], axis=1).astype(np.float64)

        tri = None
        if self.n_nodes >= 3:
            try:
                tri = Delaunay(points)
            except QhullError:
                tri = None  # collinear or otherwise degenerate: nearest only
        if tri is not None and tri.simplices.size > 0:
            simplex = tri.find_simplex(grid)
            inside = simplex >= 0
            s = simplex[inside]
            bary = np.einsum(
                "ijk,ik->ij",
                tri.transform[s, :2],
                grid[inside] - tri.transform[s, 2],
            )
            self._weights = np.concatenate([bary, 1.0 - bary.sum(axis=1, keepdims=True)], axis=1)
            self._verts = tri.simplices[s]
            self._inside = inside
        else:
            self._weights = np.empty((0, 3))
            self._verts = np.empty((0, 3), dtype=np.intp)
            self._inside = np.zeros(height * width, dtype=bool)
        outside = ~self._inside
        if outside.any():
            _, nearest = cKDTree(points).query(grid[outside])
            self._nearest = nearest
        else:
            self._nearest = np.empty(0, dtype=np.intp)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if values.shape != (self.n_nodes,):
            raise DimensionError(
                f"expected {self.n_nodes} node values, got shape {values.shape}"
            )
        out = np.empty(self.height * self.width, dtype=values.dtype)
        if self._verts.size:
            out[self._inside] = (self._weights * values[self._verts]).sum(axis=1)
        out[~self._inside] = values[self._nearest]
        out[self._node_flat] = values  # exact at nodes regardless of fp round-off
        return out.reshape(self.height, self.width)


def interpolate_scattered(
    positions: SamplingPositions, values: np.ndarray, dims: tuple[int, int]
) -> DepthMap:
    """One-shot scattered interpolation; see :class:`GridInterpolator`."""
    h, w = dims
    if (positions.height, positions.width) != (h, w):
        raise DimensionError("positions carry different grid dims than requested")
    interp = GridInterpolator(positions.rows, positions.cols, h, w)
    return DepthMap(interp(np.asarray(values, dtype=np.float64)), metric=False)


def phi1(
    x0_dec: DepthMap,
    positions: SamplingPositions,
    interp: GridInterpolator | None = None,
) -> DepthMap:
    """Linear component of the decoded estimate: interpolate its own values
    sampled at every position of P."""
    _check_grid(x0_dec, positions)
    if interp is None:
        interp = GridInterpolator(positions.rows, positions.cols, x0_dec.height, x0_dec.width)
    values = x0_dec.values[positions.rows, positions.cols]
    return DepthMap(interp(values), metric=False)


def phi2(
    x0_dec: DepthMap,
    c_aligned: SparseDepth,
    positions: SamplingPositions,
    interp: GridInterpolator | None = None,
) -> DepthMap:
    """As :func:`phi1`, but condition-tagged positions take their value from
    the (scale-matched) condition instead of the estimate."""
    _check_grid(x0_dec, positions)
    if interp is None:
        interp = GridInterpolator(positions.rows, positions.cols, x0_dec.height, x0_dec.width)
    values = x0_dec.values[positions.rows, positions.cols].astype(np.float64)
    n_cond = positions.n_condition
    if len(c_aligned) != n_cond:
        raise DimensionError(
            f"condition has {len(c_aligned)} points but P tags {n_cond} condition slots"
        )
    if n_cond:
        if not (
            np.array_equal(c_aligned.rows, positions.rows[:n_cond])
            and np.array_equal(c_aligned.cols, positions.cols[:n_cond])
        ):
            raise DimensionError("condition positions do not match P's condition block")
        values[:n_cond] = c_aligned.depths
    return DepthMap(interp(values), metric=False)


def _check_grid(x0_dec: DepthMap, positions: SamplingPositions) -> None:
    if (x0_dec.height, x0_dec.width) != (positions.height, positions.width):
        raise DimensionError(
            f"grid {x0_dec.shape} does not match positions grid "
            f"({positions.height}, {positions.width})"
        )
    if len(positions) == 0:
        raise EmptyConditionError("P is empty")
