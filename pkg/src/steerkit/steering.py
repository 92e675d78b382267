"""Steered ancestral sampling for depth completion.

Each reverse step is followed by a latent shift toward a corrected clean
estimate: the decoded estimate has its own linear component (scattered
interpolation over P) swapped for the one that honors the sparse condition,
the corrected map is re-encoded, and the difference to the current clean
estimate is added with strength lambda_t = k * sqrt(1 - abar_t).  Strength
therefore decays as the trajectory sharpens, large early corrections, gentle
late ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import align, align_condition
from .codec import LatentCodec, decode_depth, encode_depth
from .ddpm import NoiseSchedule, clean_from_eps, clean_from_v, reverse_step
from .denoisers import Denoiser
from .errors import (
    DimensionError,
    EmptyConditionError,
    InsufficientDataError,
    ParameterError,
)
from .geometry import GridInterpolator, select_positions
from .types import DepthMap, LatentSample, SamplingPositions, SparseDepth

__all__ = ["SteeringConfig", "lambda_at", "steer_step", "complete"]


@dataclass(frozen=True)
class SteeringConfig:
    """Knobs of one completion run.

    ``k`` scales the steering strength (0 disables steering entirely);
    ``zeta`` is the distance gate for fill positions, in pixels;
    ``fill_density`` is the expected fill count per zeta x zeta cell of the
    region farther than zeta from any condition point; ``steps`` must match
    the schedule's T.  ``refit_per_step`` re-fits the condition-to-estimate
    scale at every step instead of freezing the first fit;
    ``resample_positions`` redraws the fill positions each step.
    """

    k: float = 0.3
    zeta: float = 7.0
    fill_density: float = 1.0
    steps: int = 50
    seed: int = 0
    refit_per_step: bool = True
    resample_positions: bool = False

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ParameterError(f"k must be >= 0, got {self.k}")
        if self.zeta <= 0:
            raise ParameterError(f"zeta must be positive, got {self.zeta}")
        if self.fill_density < 0:
            raise ParameterError(f"fill_density must be >= 0, got {self.fill_density}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")


def lambda_at(k: float, t: int, sched: NoiseSchedule) -> float:
    """Steering strength k * sqrt(1 - abar_t); grows with t."""
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    sched.check_step(t)
    return k * float(sched.sqrt_one_minus_alpha_bar[t])


def steer_step(
    x_prev: LatentSample,
    x0_est: LatentSample,
    x0_dec: DepthMap,
    c_aligned: SparseDepth,
    positions: SamplingPositions,
    lam: float,
    codec: LatentCodec,
    interp: GridInterpolator | None = None,
) -> LatentSample:
    """Shift ``x_prev`` by lam * (encode(x0_dec - phi1 + phi2) - x0_est).

    phi1/phi2 are the scattered interpolants of the estimate's own values
    over P versus the condition-substituted values; since interpolation is
    linear in the node values, their difference is computed in one pass by
    interpolating the per-node value differences.  ``c_aligned`` must already
    live in ``x0_dec``'s value range.
    """
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    if len(positions) == 0:
        raise EmptyConditionError("P is empty")
    if lam == 0.0:
        return x_prev
    if (x0_dec.height, x0_dec.width) != (positions.height, positions.width):
        raise DimensionError(
            f"estimate grid {x0_dec.shape} does not match positions grid "
            f"({positions.height}, {positions.width})"
        )
    n_cond = positions.n_condition
    if len(c_aligned) != n_cond:
        raise DimensionError(
            f"condition has {len(c_aligned)} points but P tags {n_cond} condition slots"
        )
    if n_cond and not (
        np.array_equal(c_aligned.rows, positions.rows[:n_cond])
        and np.array_equal(c_aligned.cols, positions.cols[:n_cond])
    ):
        raise DimensionError("condition positions do not match P's condition block")
    if interp is None:
        interp = GridInterpolator(
            positions.rows, positions.cols, x0_dec.height, x0_dec.width
        )
    delta = np.zeros(len(positions))
    if n_cond:
        at_cond = x0_dec.values[positions.rows[:n_cond], positions.cols[:n_cond]]
        delta[:n_cond] = c_aligned.depths - at_cond
    corrected = DepthMap(x0_dec.values + interp(delta), metric=False)
    encoded = encode_depth(corrected, codec)
    shift = lam * (encoded.values - x0_est.values)
    return x_prev.with_values(
        x_prev.values + shift.astype(x_prev.values.dtype, copy=False)
    )


def complete(
    rgb: np.ndarray | None,
    c: SparseDepth,
    config: SteeringConfig,
    denoiser: Denoiser,
    codec: LatentCodec,
    sched: NoiseSchedule,
    rng: np.random.Generator | None = None,
    dtype=np.float64,
) -> DepthMap:
    """Run the full steered reverse process and return metric dense depth.

    Starts from Gaussian noise, walks t = T..1 (predict, form the clean
    estimate, ancestral reverse step, then the steering shift), decodes the
    final clean latent to relative depth and maps it to meters with a
    least-squares fit against the condition.  Deterministic for a given seed:
    the noise stream and the fill-position stream are split up front, so a
    k=0 run consumes exactly the same noise draws as a steered one.

    ``rgb`` is channel-first ``(3, H, W)`` or None; it is encoded once and
    handed to the denoiser as conditioning (the built-in oracles ignore it).
    An explicit ``rng`` overrides ``config.seed``.
    """
    if len(c) < 2:
        raise InsufficientDataError("completion needs >= 2 condition points")
    if sched.T != config.steps:
        raise ParameterError(
            f"config.steps = {config.steps} but schedule has T = {sched.T}"
        )
    codec.check_dims(c.height, c.width)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    noise_rng, pos_rng = rng.spawn(2)

    rgb_latent = None
    if rgb is not None:
        rgb = np.asarray(rgb)
        if rgb.shape != (3, c.height, c.width):
            raise DimensionError(
                f"rgb must be (3, {c.height}, {c.width}), got {rgb.shape}"
            )
        rgb_latent = codec.encode(rgb.astype(dtype, copy=False)).values

    f = codec.scale_factor
    latent_shape = (codec.latent_channels, c.height // f, c.width // f)
    steering = config.k > 0
    positions = interp = None
    if steering and not config.resample_positions:
        positions = select_positions(c, config.zeta, config.fill_density, pos_rng)
        interp = GridInterpolator(positions.rows, positions.cols, c.height, c.width)

    x = LatentSample(noise_rng.standard_normal(latent_shape, dtype=dtype), sched.T)
    frozen_fit = None
    for t in range(sched.T, 0, -1):
        pred = denoiser.predict(x, rgb_latent)
        if denoiser.kind == "v":
            x0_est = clean_from_v(x, pred, t, sched)
        else:
            x0_est = clean_from_eps(x, pred, t, sched)
        x_prev = reverse_step(x, x0_est, t, sched, noise_rng)
        if steering:
            if config.resample_positions:
                positions = select_positions(c, config.zeta, config.fill_density, pos_rng)
                interp = GridInterpolator(positions.rows, positions.cols, c.height, c.width)
            x0_dec = decode_depth(x0_est, codec)
            if config.refit_per_step or frozen_fit is None:
                c_aligned, frozen_fit = align_condition(c, x0_dec)
            else:
                c_aligned = c.with_depths(frozen_fit.apply(c.depths), metric=False)
            lam = lambda_at(config.k, t, sched)
            x = steer_step(x_prev, x0_est, x0_dec, c_aligned, positions, lam, codec, interp)
        else:
            x = x_prev

    d_rel = decode_depth(x, codec)
    d_metric, _ = align(d_rel, c)
    return d_metric
