"""DDPM forward/reverse mechanics.

Implements the closed-form forward marginal

    x_t = sqrt(abar_t) * x_0 + sqrt(1 - abar_t) * eps,    eps ~ N(0, I)

and the ancestral reverse step

    x_{t-1} = mu_t + sigma_t * z
    mu_t    = sqrt(abar_{t-1}) * beta_t / (1 - abar_t) * x0_est
            + sqrt(alpha_t) * (1 - abar_{t-1}) / (1 - abar_t) * x_t
    sigma_t^2 = (1 - abar_{t-1}) / (1 - abar_t) * beta_t

with abar_0 = 1 by convention, so sigma_1 = 0 and the final step is
deterministic.  Timesteps are 1-indexed: t runs over 1..T, t = 0 is clean.

Clean-sample estimation supports both noise-prediction models,

    x0 = (x_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t)

and velocity-prediction models with v = sqrt(abar_t) * eps - sqrt(1 - abar_t) * x0,

    x0 = sqrt(abar_t) * x_t - sqrt(1 - abar_t) * v_hat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, RangeError, SingularityError
from .types import LatentSample

__all__ = [
    "NoiseSchedule",
    "ScheduleSpec",
    "build_schedule",
    "add_noise",
    "clean_from_eps",
    "clean_from_v",
    "reverse_step",
]


@dataclass(frozen=True)
class ScheduleSpec:
    """Variance-schedule family and endpoints.

    ``linear`` interpolates beta directly; ``scaled_linear`` interpolates
    sqrt(beta) (the convention of latent-diffusion models).
    """

    kind: str = "linear"
    beta_start: float = 1e-4
    beta_end: float = 0.02


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Precomputed schedule tables, indexed 0..T with index 0 the boundary.

    ``beta[0]`` and ``sigma2[0]`` are 0 and ``alpha_bar[0]`` is 1; they exist
    only so that ``table[t]`` works directly for 1-indexed timesteps.
    Immutable and safe to share between concurrent runs.
    """

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma2: np.ndarray
    sqrt_alpha_bar: np.ndarray
    sqrt_one_minus_alpha_bar: np.ndarray

    @classmethod
    def from_betas(cls, betas: np.ndarray) -> "NoiseSchedule":
        """Build every derived table from a per-step beta table (length T)."""
        betas = np.asarray(betas, dtype=np.float64).ravel()
        T = len(betas)
        if T < 1:
            raise ParameterError("schedule needs at least one step")
        if np.any(betas <= 0) or np.any(betas >= 1):
            raise ParameterError("beta values must lie strictly inside (0, 1)")
        beta = np.concatenate([[0.0], betas])
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        prev = alpha_bar[:-1]
        sigma2 = np.concatenate([[0.0], (1.0 - prev) / (1.0 - alpha_bar[1:]) * beta[1:]])
        sched = cls(
            T=T,
            beta=beta,
            alpha=alpha,
            alpha_bar=alpha_bar,
            sigma2=sigma2,
            sqrt_alpha_bar=np.sqrt(alpha_bar),
            sqrt_one_minus_alpha_bar=np.sqrt(1.0 - alpha_bar),
        )
        for arr in (sched.beta, sched.alpha, sched.alpha_bar, sched.sigma2,
                    sched.sqrt_alpha_bar, sched.sqrt_one_minus_alpha_bar):
            arr.flags.writeable = False
        return sched

    def check_step(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise RangeError(f"timestep {t} outside 1..{self.T}")


def build_schedule(T: int, spec: ScheduleSpec = ScheduleSpec()) -> NoiseSchedule:
    """Construct a schedule of ``T`` steps from a spec.

    Deterministic for equal inputs.  Raises :class:`ParameterError` for
    non-monotone or out-of-range endpoints.
    """
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if not (0.0 < spec.beta_start <= spec.beta_end < 1.0):
        raise ParameterError(
            f"need 0 < beta_start <= beta_end < 1, got ({spec.beta_start}, {spec.beta_end})"
        )
    if spec.kind == "linear":
        betas = np.linspace(spec.beta_start, spec.beta_end, T)
    elif spec.kind == "scaled_linear":
        betas = np.linspace(spec.beta_start ** 0.5, spec.beta_end ** 0.5, T) ** 2
    else:
        raise ParameterError(f"unknown schedule kind {spec.kind!r}")
    return NoiseSchedule.from_betas(betas)


def _check_shapes(a: LatentSample, b: LatentSample) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"latent shapes differ: {a.shape} vs {b.shape}")


def add_noise(x0: LatentSample, eps: LatentSample, t: int, sched: NoiseSchedule) -> LatentSample:
    """Forward-noise a clean sample to timestep ``t`` with the given noise."""
    _check_shapes(x0, eps)
    sched.check_step(t)
    # Python-float coefficients keep float32 latents in float32 (NEP 50).
    a = float(sched.sqrt_alpha_bar[t])
    b = float(sched.sqrt_one_minus_alpha_bar[t])
    return LatentSample(a * x0.values + b * eps.values, timestep=t)


def clean_from_eps(
    x_t: LatentSample, eps_hat: LatentSample, t: int, sched: NoiseSchedule
) -> LatentSample:
    """Invert the forward marginal given a noise prediction."""
    _check_shapes(x_t, eps_hat)
    if not 0 <= t <= sched.T:
        raise RangeError(f"timestep {t} outside 0..{sched.T}")
    sab = float(sched.sqrt_alpha_bar[t])
    if sab == 0.0:
        raise SingularityError("alpha_bar is zero at this timestep")
    b = float(sched.sqrt_one_minus_alpha_bar[t])
    return LatentSample((x_t.values - b * eps_hat.values) / sab, timestep=0)


def clean_from_v(
    x_t: LatentSample, v_hat: LatentSample, t: int, sched: NoiseSchedule
) -> LatentSample:
    """Clean-sample estimate from a velocity prediction."""
    _check_shapes(x_t, v_hat)
    if not 0 <= t <= sched.T:
        raise RangeError(f"timestep {t} outside 0..{sched.T}")
    a = float(sched.sqrt_alpha_bar[t])
    b = float(sched.sqrt_one_minus_alpha_bar[t])
    return LatentSample(a * x_t.values - b * v_hat.values, timestep=0)


def reverse_step(
    x_t: LatentSample,
    x0_est: LatentSample,
    t: int,
    sched: NoiseSchedule,
    rng: np.random.Generator,
) -> LatentSample:
    """One ancestral step from ``t`` to ``t - 1``.

    At ``t == 1`` the posterior variance vanishes and no noise is drawn, so
    the generator state advances only for ``t > 1``.
    """
    _check_shapes(x_t, x0_est)
    sched.check_step(t)
    one_minus_abar = 1.0 - float(sched.alpha_bar[t])
    coef_x0 = float(sched.sqrt_alpha_bar[t - 1]) * float(sched.beta[t]) / one_minus_abar
    coef_xt = float(np.sqrt(sched.alpha[t])) * (1.0 - float(sched.alpha_bar[t - 1])) / one_minus_abar
    mu = coef_x0 * x0_est.values + coef_xt * x_t.values
    if t > 1:
        z = rng.standard_normal(x_t.shape, dtype=x_t.values.dtype)
        mu = mu + float(np.sqrt(sched.sigma2[t])) * z
    return LatentSample(mu, timestep=t - 1)
