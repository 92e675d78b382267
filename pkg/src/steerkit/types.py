"""Shared domain types.

All grids are numpy arrays indexed ``[row, col]`` (row 0 at the top).  Latents
are channel-first ``(C, H, W)``.  Depth values are meters when ``metric`` is
true, otherwise an arbitrary affine-related scale ("relative" depth).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError, NumericError, RangeError

__all__ = ["LatentSample", "DepthMap", "SparseDepth", "SamplingPositions"]


@dataclass(eq=False)
class LatentSample:
    """A multi-channel 2D grid tagged with the diffusion timestep it lives at.

    ``timestep == 0`` marks a clean sample (or an estimate of one); noise and
    velocity predictions reuse this shape with the timestep of the latent they
    were predicted from.
    """

    values: np.ndarray  # (C, H, W)
    timestep: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.ndim != 3:
            raise DimensionError(
                f"latent values must be (C, H, W), got shape {self.values.shape}"
            )
        if self.timestep < 0:
            raise RangeError(f"timestep must be >= 0, got {self.timestep}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("latent values must be finite")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray, timestep: int | None = None) -> "LatentSample":
        """Same tag (or a new one) around new values."""
        t = self.timestep if timestep is None else timestep
        return LatentSample(values, t)


@dataclass(eq=False)
class DepthMap:
    """Dense H x W depth grid.  Zero marks an invalid pixel."""

    values: np.ndarray  # (H, W)
    metric: bool = True

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise DimensionError(f"depth map must be (H, W), got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("depth values must be finite")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def valid_mask(self) -> np.ndarray:
        """Boolean grid of pixels holding an actual measurement."""
        return self.values > 0


@dataclass(eq=False)
class SparseDepth:
    """Scattered depth observations projected into the image plane.

    Metric instances (the condition) must hold strictly positive depths in
    meters.  Relative instances (a condition re-scaled into an estimate's
    value range) only need finite values.
    """

    rows: np.ndarray  # (N,) int
    cols: np.ndarray  # (N,) int
    depths: np.ndarray  # (N,) float
    height: int
    width: int
    metric: bool = True
    _mask: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.intp).ravel()
        self.cols = np.asarray(self.cols, dtype=np.intp).ravel()
        self.depths = np.asarray(self.depths, dtype=np.float64).ravel()
        if not (len(self.rows) == len(self.cols) == len(self.depths)):
            raise DimensionError("rows, cols and depths must have equal length")
        if self.height <= 0 or self.width <= 0:
            raise DimensionError("grid dimensions must be positive")
        n = len(self.rows)
        if n:
            if self.rows.min() < 0 or self.rows.max() >= self.height:
                raise DataError("row index out of bounds")
            if self.cols.min() < 0 or self.cols.max() >= self.width:
                raise DataError("col index out of bounds")
            flat = self.rows * self.width + self.cols
            if len(np.unique(flat)) != n:
                raise DataError("positions must be unique")
            if not np.all(np.isfinite(self.depths)):
                raise DataError("depths must be finite")
            if self.metric and self.depths.min() <= 0:
                raise DataError("metric depths must be positive")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def mask(self) -> np.ndarray:
        """Boolean (H, W) grid, true at observed positions.  Cached."""
        if self._mask is None:
            m = np.zeros((self.height, self.width), dtype=bool)
            m[self.rows, self.cols] = True
            self._mask = m
        return self._mask

    def dense(self) -> np.ndarray:
        """(H, W) grid with observed depths, zero elsewhere."""
        d = np.zeros((self.height, self.width), dtype=np.float64)
        d[self.rows, self.cols] = self.depths
        return d

    def with_depths(self, depths: np.ndarray, metric: bool | None = None) -> "SparseDepth":
        """Same positions, new values (used when re-scaling the condition)."""
        if metric is None:
            metric = self.metric
        return SparseDepth(self.rows, self.cols, depths, self.height, self.width, metric)

    @classmethod
    def from_points(
        cls, points, height: int, width: int, metric: bool = True
    ) -> "SparseDepth":
        """Build from an iterable of ``(row, col, depth)`` triples."""
        pts = list(points)
        if pts:
            rows, cols, depths = (np.asarray(x) for x in zip(*pts))
        else:
            rows = cols = depths = np.empty(0)
        return cls(rows, cols, depths, height, width, metric)


@dataclass(eq=False)
class SamplingPositions:
    """The union of condition positions and random fill positions.

    The condition block comes first and preserves the order of the
    :class:`SparseDepth` it was built from, so condition values can be
    substituted positionally.
    """

    rows: np.ndarray  # (N,) int
    cols: np.ndarray  # (N,) int
    is_condition: np.ndarray  # (N,) bool
    height: int
    width: int

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.intp).ravel()
        self.cols = np.asarray(self.cols, dtype=np.intp).ravel()
        self.is_condition = np.asarray(self.is_condition, dtype=bool).ravel()
        if not (len(self.rows) == len(self.cols) == len(self.is_condition)):
            raise DimensionError("rows, cols and is_condition must have equal length")
        n = len(self.rows)
        if n:
            if self.rows.min() < 0 or self.rows.max() >= self.height:
                raise DataError("row index out of bounds")
            if self.cols.min() < 0 or self.cols.max() >= self.width:
                raise DataError("col index out of bounds")
            flat = self.rows * self.width + self.cols
            if len(np.unique(flat)) != n:
                raise DataError("positions must be unique")
            cond = np.flatnonzero(self.is_condition)
            if cond.size and (cond[-1] - cond[0] + 1 != cond.size or cond[0] != 0):
                raise DataError("condition positions must form the leading block")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_condition(self) -> int:
        return int(self.is_condition.sum())

    @property
    def n_fill(self) -> int:
        return len(self) - self.n_condition

    def coords(self) -> np.ndarray:
        """(N, 2) array of ``(row, col)`` pairs."""
        return np.stack([self.rows, self.cols], axis=1)
