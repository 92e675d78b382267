"""
Noise schedules and ancestral sampling
======================================

Builds the default variance schedule, inspects how much signal survives at
each step, then runs the reverse process with an oracle denoiser to show
that sampling is exact when the predictor is.
"""

import numpy as np

from steerkit import (
    LatentSample,
    OracleDenoiser,
    ScheduleSpec,
    add_noise,
    build_schedule,
    clean_from_eps,
    reverse_step,
)

# The default schedule ramps beta linearly from 1e-4 to 0.02.  Over 50 steps
# that only removes ~40% of the signal variance; the "hot" variant below
# pushes beta to 0.4 and actually reaches pure noise.
mild = build_schedule(50)
hot = build_schedule(50, ScheduleSpec("linear", 1e-4, 0.4))

print("signal fraction alpha_bar[t] (mild vs hot):")
for t in (1, 10, 25, 40, 50):
    print(f"  t={t:2d}   {mild.alpha_bar[t]:8.4f}   {hot.alpha_bar[t]:10.2e}")

# Forward process: one draw of noise, many corruption levels.
rng = np.random.default_rng(0)
x0 = LatentSample(rng.standard_normal((1, 16, 16)))
eps = LatentSample(rng.standard_normal((1, 16, 16)))
x_noisy = add_noise(x0, eps, 50, hot)
print(f"\nx_50 correlation with x_0: "
      f"{np.corrcoef(x0.values.ravel(), x_noisy.values.ravel())[0, 1]:+.3f}")

# Knowing the exact noise inverts the corruption to machine precision.
recovered = clean_from_eps(x_noisy, eps, 50, hot)
print(f"inversion error: {np.abs(recovered.values - x0.values).max():.2e}")

# Reverse process: start from pure noise and walk t = T..1.  An oracle
# denoiser (it was told x_0) collapses onto the target; the final step is
# deterministic, so the trajectory lands on it exactly.
den = OracleDenoiser(x0.values, hot)
x = LatentSample(rng.standard_normal(x0.shape), timestep=hot.T)
print("\nreverse trajectory with an oracle denoiser:")
for t in range(hot.T, 0, -1):
    x0_est = clean_from_eps(x, den.predict(x), t, hot)
    x = reverse_step(x, x0_est, t, hot, rng)
    if t in (50, 25, 10, 1):
        err = np.abs(x.values - x0.values).max()
        print(f"  after step t={t:2d}: max|x - x0| = {err:.3e}")
