"""
Scale-shift alignment and bias models
=====================================

A relative depth estimate is only defined up to an affine map of metric
depth.  This walks through recovering that map from sparse observations,
then shows the bias fields used to degrade the oracle denoiser into a
realistic stand-in for a learned model.
"""

import numpy as np

from steerkit import (
    AffineBias,
    ComposedBias,
    DepthMap,
    GaussianBlurBias,
    PlaneFitBias,
    align,
    fit_scale_shift,
    random_scene,
    sample_sparse,
    synth_scene,
)

_, gt = synth_scene(random_scene(11, height=120, width=160))

# Pretend a model produced depth in some arbitrary affine frame.
relative = DepthMap(0.31 * gt.values - 0.42, metric=False)
c = sample_sparse(gt, 60, np.random.default_rng(4))

tf = fit_scale_shift(relative.values[c.rows, c.cols], c.depths)
print(f"recovered scale {tf.scale:.4f} (true {1 / 0.31:.4f}), "
      f"shift {tf.shift:.4f} (true {0.42 / 0.31:.4f})")
print(f"fit rmse over {tf.n_points} points: {tf.rmse:.2e} m")

metric, _ = align(relative, c)
print(f"aligned map error: {np.abs(metric.values - gt.values).max():.2e} m")

# A noisy condition degrades the fit gracefully.
noisy = c.with_depths(c.depths + np.random.default_rng(5).normal(0, 0.05, len(c)))
tf_n = fit_scale_shift(relative.values[noisy.rows, noisy.cols], noisy.depths)
print(f"with 5 cm condition noise: scale {tf_n.scale:.4f}, rmse {tf_n.rmse:.3f} m")

# Bias fields distort a clean map the way real predictors do: global affine
# drift, loss of detail, planar flattening.  They compose left to right.
clean = gt.values[None]  # single-channel latent layout
for name, bias in (
    ("affine 1.35x - 0.8", AffineBias(1.35, -0.8)),
    ("blur sigma 6", GaussianBlurBias(6.0)),
    ("plane fit", PlaneFitBias()),
    ("affine + blur", ComposedBias(AffineBias(1.35, -0.8), GaussianBlurBias(6.0))),
):
    b = bias(clean)
    print(f"  {name:20s} -> mean shift {b.mean() - clean.mean():+.2f}, "
          f"detail kept {np.std(b - b.mean()) / np.std(clean - clean.mean()):.0%}")
