"""Scale-and-shift alignment between relative and metric depth.

A diffusion estimate lives in an arbitrary affine value range; the sparse
condition is metric.  Both directions of the same least-squares fit are
needed: pulling the condition into the estimate's range each step, and
pushing the final estimate out to meters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, DimensionError, InsufficientDataError
from .types import DepthMap, SparseDepth

__all__ = ["AffineDepthTransform", "fit_scale_shift", "align", "align_condition"]


@dataclass(frozen=True)
class AffineDepthTransform:
    """Result of a least-squares fit ``target ~ scale * source + shift``."""

    scale: float
    shift: float
    rmse: float  # residual RMSE at the fit points, in target units
    n_points: int

    @property
    def flipped(self) -> bool:
        """True when the fit inverted the depth ordering (negative scale)."""
        return self.scale < 0

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.scale * values + self.shift


def fit_scale_shift(source: np.ndarray, target: np.ndarray) -> AffineDepthTransform:
    """Closed-form least squares for ``target ~ scale * source + shift``.

    Requires at least two points and non-constant ``source``.
    """
    source = np.asarray(source, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    if source.shape != target.shape:
        raise DimensionError(
            f"source and target lengths differ: {source.size} vs {target.size}"
        )
    n = source.size
    if n < 2:
        raise InsufficientDataError(f"scale/shift fit needs >= 2 points, got {n}")
    sm = source.mean()
    tm = target.mean()
    ds = source - sm
    var = float(ds @ ds)
    # Threshold is relative to the data's own magnitude so that meter-scale
    # and millimeter-scale inputs degenerate at the same geometry.
    if var <= 1e-12 * n * max(sm * sm, 1e-30):
        raise DegenerateFitError("source values are (numerically) constant")
    scale = float(ds @ (target - tm)) / var
    shift = tm - scale * sm
    resid = target - (scale * source + shift)
    rmse = float(np.sqrt(resid @ resid / n))
    return AffineDepthTransform(scale, shift, rmse, n)


def align(estimate: DepthMap, condition: SparseDepth) -> tuple[DepthMap, AffineDepthTransform]:
    """Map a relative estimate into the condition's metric range.

    Fits on the estimate's values at the condition positions and applies the
    transform to the whole grid.
    """
    if (estimate.height, estimate.width) != (condition.height, condition.width):
        raise DimensionError(
            f"estimate grid {estimate.shape} does not match condition grid "
            f"({condition.height}, {condition.width})"
        )
    if len(condition) < 2:
        raise InsufficientDataError("alignment needs >= 2 condition points")
    at_cond = estimate.values[condition.rows, condition.cols]
    transform = fit_scale_shift(at_cond, condition.depths)
    return DepthMap(transform.apply(estimate.values), metric=condition.metric), transform


def align_condition(
    condition: SparseDepth, estimate: DepthMap
) -> tuple[SparseDepth, AffineDepthTransform]:
    """Map the metric condition into the estimate's relative range.

    The inverse direction of :func:`align`: fits condition depths onto the
    estimate's values at the same positions.
    """
    if (estimate.height, estimate.width) != (condition.height, condition.width):
        raise DimensionError(
            f"estimate grid {estimate.shape} does not match condition grid "
            f"({condition.height}, {condition.width})"
        )
    if len(condition) < 2:
        raise InsufficientDataError("alignment needs >= 2 condition points")
    at_cond = estimate.values[condition.rows, condition.cols]
    transform = fit_scale_shift(condition.depths, at_cond)
    return condition.with_depths(transform.apply(condition.depths), metric=False), transform
