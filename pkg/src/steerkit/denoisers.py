"""Denoiser contract and built-in test oracles.

A denoiser maps a noisy latent (and optional RGB conditioning latent) to a
model prediction, either the noise itself ("eps") or the velocity ("v",
v = sqrt(abar)*eps - sqrt(1-abar)*x0).  Real models live behind the bridge
client (:mod:`steerkit.bridge`); the oracles here derive the prediction from
a known clean latent, which makes pipeline behavior provable in tests:

* :class:`OracleDenoiser` answers from the exact clean latent, so the
  reverse process contracts onto it and completion error is the codec's.
* :class:`BiasedOracleDenoiser` answers from a corrupted clean latent, an
  estimator that is confidently wrong in a controlled way, so steering has
  a measurable error to remove.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from typing import Protocol, runtime_checkable

from .ddpm import NoiseSchedule
from .errors import DimensionError, ParameterError, SingularityError
from .types import LatentSample

__all__ = [
    "Denoiser",
    "oracle_predict",
    "biased_oracle_predict",
    "OracleDenoiser",
    "BiasedOracleDenoiser",
    "GaussianBlurBias",
    "AffineBias",
    "PlaneFitBias",
    "ComposedBias",
]

_KINDS = ("eps", "v")


@runtime_checkable
class Denoiser(Protocol):
    """Anything with a prediction ``kind`` and a ``predict`` method."""

    kind: str

    def predict(
        self, x_t: LatentSample, rgb_latent: np.ndarray | None = None
    ) -> LatentSample: ...


def _check_kind(kind: str) -> None:
    if kind not in _KINDS:
        raise ParameterError(f"kind must be one of {_KINDS}, got {kind!r}")


def _predict_from_clean(
    x_t: np.ndarray, t: int, x0: np.ndarray, sched: NoiseSchedule, kind: str
) -> np.ndarray:
    """The prediction a perfect model of ``x0`` would emit at step t.

    eps = (x_t - sqrt(abar)*x0) / sqrt(1-abar)
    v   = (sqrt(abar)*x_t - x0) / sqrt(1-abar)
    """
    if x0.shape != x_t.shape:
        raise DimensionError(f"clean latent shape {x0.shape} != x_t shape {x_t.shape}")
    sab = float(sched.sqrt_alpha_bar[t])
    somab = float(sched.sqrt_one_minus_alpha_bar[t])
    if somab == 0.0:
        raise SingularityError(f"alpha_bar = 1 at t={t}; prediction undefined")
    if kind == "eps":
        out = (x_t - sab * x0) / somab
    else:
        out = (sab * x_t - x0) / somab
    return out.astype(x_t.dtype, copy=False)


def oracle_predict(
    x_t: LatentSample,
    t: int,
    ground_truth_x0: np.ndarray,
    sched: NoiseSchedule,
    kind: str = "eps",
) -> LatentSample:
    """Prediction derived from the exact clean latent (inverts the forward
    marginal)."""
    _check_kind(kind)
    sched.check_step(t)
    x0 = np.asarray(ground_truth_x0)
    return x_t.with_values(_predict_from_clean(x_t.values, t, x0, sched, kind))


def biased_oracle_predict(
    x_t: LatentSample,
    t: int,
    ground_truth_x0: np.ndarray,
    bias,
    sched: NoiseSchedule,
    kind: str = "eps",
) -> LatentSample:
    """As :func:`oracle_predict`, answering from ``bias(ground_truth_x0)``."""
    _check_kind(kind)
    sched.check_step(t)
    x0 = np.asarray(bias(np.asarray(ground_truth_x0)))
    return x_t.with_values(_predict_from_clean(x_t.values, t, x0, sched, kind))


class OracleDenoiser:
    """Answers every query from the exact clean latent.  Ignores RGB."""

    def __init__(self, x0: np.ndarray, sched: NoiseSchedule, kind: str = "eps"):
        _check_kind(kind)
        self.x0 = np.asarray(x0)
        if self.x0.ndim != 3:
            raise DimensionError(f"clean latent must be (C, H, W), got {self.x0.shape}")
        self.sched = sched
        self.kind = kind

    def predict(
        self, x_t: LatentSample, rgb_latent: np.ndarray | None = None
    ) -> LatentSample:
        return oracle_predict(x_t, x_t.timestep, self.x0, self.sched, self.kind)


class BiasedOracleDenoiser:
    """Answers from a corrupted clean latent; optionally trajectory-aware.

    With ``trust=0`` (the default) the implied clean sample is frozen at
    ``bias(x0)`` no matter what latent is presented: the estimator never
    changes its mind, and any accumulated steering shift is discarded when
    the noiseless final reverse step snaps onto the frozen estimate.  That
    models a maximally stubborn network and is the right oracle for testing
    the pipeline's plumbing.

    ``trust > 0`` models an estimator that also believes the latent it is
    shown, the way a relative-depth network is confident about structure but
    agnostic about the global scale/shift frame.  Each query the latent's own
    implied clean sample is computed, the frozen estimate is re-fit to it with
    a global scale-and-shift (least squares over all pixels, so fit noise
    averages out), and the remaining structural deviation is blended back in.
    Both the frame adoption and the deviation carry weight
    w_t = abar*trust^2 / (abar*trust^2 + 1 - abar), the posterior weight for
    a Gaussian prior of width ``trust`` around the frozen estimate given the
    forward-marginal noise level.  The weight is ~0 at high noise and ~1 near
    t=0, so late-stage corrections (such as steering shifts) persist in the
    estimator's output instead of being thrown away, and regions the
    corrections never touch still ride the same global frame as regions they
    do.  ``harmonize_radius`` smooths the deviation field (channel-mean,
    Gaussian, sigma in pixels) so the estimator responds to spatially
    coherent corrections rather than reading per-pixel noise as signal.
    """

    def __init__(
        self,
        x0: np.ndarray,
        bias,
        sched: NoiseSchedule,
        kind: str = "eps",
        trust: float = 0.0,
        harmonize_radius: float = 0.0,
    ):
        _check_kind(kind)
        if trust < 0:
            raise ParameterError(f"trust must be >= 0, got {trust}")
        if harmonize_radius < 0:
            raise ParameterError(f"harmonize_radius must be >= 0, got {harmonize_radius}")
        self.x0 = np.asarray(x0)
        if self.x0.ndim != 3:
            raise DimensionError(f"clean latent must be (C, H, W), got {self.x0.shape}")
        self.biased = np.asarray(bias(self.x0))
        if self.biased.shape != self.x0.shape:
            raise DimensionError(
                f"bias changed latent shape {self.x0.shape} -> {self.biased.shape}"
            )
        if not np.all(np.isfinite(self.biased)):
            raise ParameterError("bias produced non-finite values")
        self.sched = sched
        self.kind = kind
        self.trust = float(trust)
        self.harmonize_radius = float(harmonize_radius)

    def _implied_clean(self, x_t: LatentSample) -> np.ndarray:
        t = x_t.timestep
        b = self.biased.astype(x_t.values.dtype, copy=False)
        if self.trust == 0.0:
            return b
        abar = float(self.sched.alpha_bar[t])
        sab = float(self.sched.sqrt_alpha_bar[t])
        w = abar * self.trust**2 / (abar * self.trust**2 + 1.0 - abar)
        naive = (x_t.values / sab).mean(axis=0, dtype=np.float64)
        shape = b.mean(axis=0, dtype=np.float64)
        var = float(shape.var())
        if var > 0.0:
            s = float(((shape - shape.mean()) * (naive - naive.mean())).mean()) / var
        else:
            s = 1.0
        m = float(naive.mean()) - s * float(shape.mean())
        base = s * shape + m
        dev = naive - base
        if self.harmonize_radius > 0:
            dev = ndimage.gaussian_filter(dev, self.harmonize_radius)
        return b + (w * (base - shape + dev))[None].astype(b.dtype, copy=False)

    def predict(
        self, x_t: LatentSample, rgb_latent: np.ndarray | None = None
    ) -> LatentSample:
        t = x_t.timestep
        self.sched.check_step(t)
        clean = self._implied_clean(x_t)
        return x_t.with_values(_predict_from_clean(x_t.values, t, clean, self.sched, self.kind))


class GaussianBlurBias:
    """Per-channel Gaussian blur; radius (sigma, pixels) 0 is the identity."""

    def __init__(self, radius: float):
        if not np.isfinite(radius) or radius < 0:
            raise ParameterError(f"blur radius must be finite and >= 0, got {radius}")
        self.radius = float(radius)

    def __call__(self, x0: np.ndarray) -> np.ndarray:
        if self.radius == 0.0:
            return x0.copy()
        return ndimage.gaussian_filter(x0, (0.0, self.radius, self.radius))


class AffineBias:
    """Value remap ``scale * x0 + shift``."""

    def __init__(self, scale: float, shift: float):
        if not (np.isfinite(scale) and np.isfinite(shift)):
            raise ParameterError("scale and shift must be finite")
        if scale == 0.0:
            raise ParameterError("scale 0 flattens the latent; downstream fits degenerate")
        self.scale = float(scale)
        self.shift = float(shift)

    def __call__(self, x0: np.ndarray) -> np.ndarray:
        return self.scale * x0 + self.shift


class PlaneFitBias:
    """Replaces the latent with its least-squares plane a*row + b*col + d.

    Flattens all non-planar structure, the harshest of the built-in biases.
    """

    def __call__(self, x0: np.ndarray) -> np.ndarray:
        _, h, w = x0.shape
        m = x0.mean(axis=0, dtype=np.float64)
        rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        basis = np.stack([rr.ravel(), cc.ravel(), np.ones(h * w)], axis=1)
        coef, *_ = np.linalg.lstsq(basis, m.ravel(), rcond=None)
        plane = (basis @ coef).reshape(h, w)
        return np.broadcast_to(plane, x0.shape).astype(x0.dtype, copy=True)


class ComposedBias:
    """Applies the given biases left to right."""

    def __init__(self, *biases):
        if not biases:
            raise ParameterError("ComposedBias needs at least one bias")
        self.biases = biases

    def __call__(self, x0: np.ndarray) -> np.ndarray:
        for b in self.biases:
            x0 = b(x0)
        return x0
