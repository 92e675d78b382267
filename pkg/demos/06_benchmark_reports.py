"""
Benchmark harness and report files
==================================

Runs the evaluation protocol over a small synthetic dataset with a biased
denoiser, prints the per-cell and pooled numbers, and writes the records
out as JSONL and CSV.
"""

import tempfile
from pathlib import Path

import numpy as np

from steerkit import (
    AffineBias,
    BenchmarkProtocol,
    BiasedOracleDenoiser,
    ComposedBias,
    EvaluationArea,
    GaussianBlurBias,
    IdentityCodec,
    ScheduleSpec,
    SteeringConfig,
    build_schedule,
    dataset_from_specs,
    random_scene,
    run_benchmark,
    write_records_csv,
    write_records_jsonl,
)

sched = build_schedule(25, ScheduleSpec("linear", 1e-4, 0.4))
codec = IdentityCodec()

dataset = dataset_from_specs([random_scene(i, height=112, width=152) for i in range(4)])
# Aggregates pool by area name, so give the protocol a single area; the
# named large/medium/small presets only fit full 448x608 frames.
protocol = BenchmarkProtocol(
    n_depth=850,
    ks=(0.0, 0.3),
    areas=(EvaluationArea.custom(112, 152),),
    seed=0,
)
config = SteeringConfig(steps=25, seed=5, refit_per_step=False)


def factory(latent, sched):
    bias = ComposedBias(AffineBias(1.35, -0.8), GaussianBlurBias(25.0))
    return BiasedOracleDenoiser(
        latent.astype(np.float32), bias, sched, trust=1.0, harmonize_radius=8.0
    )


result = run_benchmark(dataset, protocol, config, factory, codec, sched, dtype=np.float32)
print(f"{len(result.records)} records, {len(result.failures)} failures\n")

print("scene        area      k    rmse    delta1")
for r in result.records:
    if r.scene_id != "aggregate":
        print(f"{r.scene_id}  {r.area:>7s}  {r.k:.1f}  {r.rmse:6.3f}  {r.delta1:6.3f}")
print("\npooled over scenes:")
for r in result.records:
    if r.scene_id == "aggregate":
        print(f"  area {r.area} ({r.n_pixels // 1000}k px)  k={r.k:.1f}  "
              f"rmse {r.rmse:.3f}  rel {r.rel:.3f}")

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    write_records_jsonl(result.records, tmp / "report.jsonl")
    write_records_csv(result.records, tmp / "report.csv")
    head = (tmp / "report.csv").read_text().splitlines()
    print(f"\n{len(head) - 1} csv rows; header: {head[0]}")
