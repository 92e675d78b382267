"""Metrics, evaluation areas, sparsity protocols, and the benchmark harness.

Error metrics (over masked pixels i, prediction d, ground truth g):
  RMSE = sqrt(mean (d_i - g_i)^2)        MAE = mean |d_i - g_i|
  REL  = mean |d_i - g_i| / g_i          delta1 = frac max(d/g, g/d) < 1.25

Cross-scene aggregation pools per-pixel errors (pixel-weighted), so the
aggregate of a metric equals the metric of the union of pixels.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .codec import LatentCodec, encode_depth
from .ddpm import NoiseSchedule, build_schedule
from .denoisers import Denoiser
from .errors import (
    DataError,
    DimensionError,
    EmptyEvaluationError,
    EmptyReportError,
    ParameterError,
)
from .scenes import SceneSpec, synth_scene
from .steering import SteeringConfig, complete
from .types import DepthMap, SparseDepth

__all__ = [
    "MetricsReport",
    "EvaluationArea",
    "BenchmarkRecord",
    "BenchmarkProtocol",
    "BenchmarkResult",
    "compute_metrics",
    "area_mask",
    "sample_sparse",
    "erase_region",
    "dataset_from_specs",
    "run_benchmark",
    "aggregate_records",
    "write_records_jsonl",
    "write_records_csv",
]

# Named centered evaluation rectangles, (height, width) in pixels.
AREA_DIMS = {"large": (448, 608), "medium": (248, 408), "small": (198, 358)}


@dataclass(frozen=True)
class EvaluationArea:
    """A centered rectangle over which metrics are computed."""

    kind: str
    height: int
    width: int

    def __post_init__(self) -> None:
        if self.height <= 0 or self.width <= 0:
            raise ParameterError("area dims must be positive")

    @classmethod
    def of(cls, name: str) -> "EvaluationArea":
        if name not in AREA_DIMS:
            raise ParameterError(
                f"unknown area {name!r}; expected one of {sorted(AREA_DIMS)}"
            )
        h, w = AREA_DIMS[name]
        return cls(name, h, w)

    @classmethod
    def custom(cls, height: int, width: int) -> "EvaluationArea":
        return cls("custom", height, width)


def area_mask(area: EvaluationArea, dims: tuple[int, int]) -> np.ndarray:
    """Boolean mask of the centered ``area`` rectangle inside ``dims``."""
    h, w = dims
    if area.height > h or area.width > w:
        raise ParameterError(
            f"area {area.height}x{area.width} does not fit in image {h}x{w}"
        )
    top = (h - area.height) // 2
    left = (w - area.width) // 2
    mask = np.zeros((h, w), dtype=bool)
    mask[top : top + area.height, left : left + area.width] = True
    return mask


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    mae: float
    rel: float
    delta1: float
    n_pixels: int
    area: str = "custom"
    n_depth: int | None = None


def compute_metrics(
    pred: DepthMap,
    gt: DepthMap,
    mask: np.ndarray | None = None,
    *,
    area: str = "custom",
    n_depth: int | None = None,
) -> MetricsReport:
    """Masked error metrics; the mask defaults to gt's validity grid."""
    if pred.shape != gt.shape:
        raise DimensionError(f"pred {pred.shape} vs gt {gt.shape}")
    if mask is None:
        mask = gt.valid_mask
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gt.shape:
            raise DimensionError(f"mask {mask.shape} vs gt {gt.shape}")
    n = int(mask.sum())
    if n == 0:
        raise EmptyEvaluationError("mask selects no pixels")
    g = gt.values[mask].astype(np.float64)
    if g.min() <= 0:
        raise DataError("ground truth must be positive inside the mask")
    d = pred.values[mask].astype(np.float64)
    err = d - g
    rmse = float(np.sqrt(err @ err / n))
    mae = float(np.abs(err).mean())
    rel = float((np.abs(err) / g).mean())
    with np.errstate(divide="ignore"):
        ratio = np.maximum(d / g, g / d)
    ratio = np.where(d > 0, ratio, np.inf)
    delta1 = float((ratio < 1.25).mean())
    return MetricsReport(rmse, mae, rel, delta1, n, area=area, n_depth=n_depth)


def sample_sparse(gt: DepthMap, n: int, rng: np.random.Generator) -> SparseDepth:
    """Sample n distinct valid positions uniformly; depths copied from gt.

    Implemented by ranking a full per-pixel priority grid drawn from the
    generator, which gives the useful nesting property: restricting the
    valid region and sampling with the same seed yields exactly the
    surviving subset of the unrestricted sample.
    """
    if n < 0:
        raise ParameterError(f"sample count must be >= 0, got {n}")
    priorities = rng.random(gt.shape)
    valid = gt.valid_mask
    n_valid = int(valid.sum())
    if n > n_valid:
        raise DataError(f"requested {n} samples but only {n_valid} valid pixels")
    if n == 0:
        return SparseDepth(
            np.empty(0, int), np.empty(0, int), np.empty(0), gt.height, gt.width
        )
    flat = np.where(valid.ravel(), priorities.ravel(), np.inf)
    idx = np.argpartition(flat, n - 1)[:n]
    idx.sort()
    rows, cols = np.divmod(idx, gt.width)
    return SparseDepth(rows, cols, gt.values[rows, cols], gt.height, gt.width)


def erase_region(c: SparseDepth, area: EvaluationArea) -> SparseDepth:
    """Drop every condition point inside the centered area rectangle."""
    mask = area_mask(area, (c.height, c.width))
    keep = ~mask[c.rows, c.cols]
    return SparseDepth(
        c.rows[keep], c.cols[keep], c.depths[keep], c.height, c.width, c.metric
    )


@dataclass(frozen=True)
class BenchmarkRecord:
    scene_id: str
    area: str
    n_depth: int
    k: float
    rmse: float
    mae: float
    rel: float
    delta1: float
    n_pixels: int
    runtime_ms: float

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "area": self.area,
            "n_depth": self.n_depth,
            "k": self.k,
            "rmse": self.rmse,
            "mae": self.mae,
            "rel": self.rel,
            "delta1": self.delta1,
            "n_pixels": self.n_pixels,
            "runtime_ms": self.runtime_ms,
        }


@dataclass(frozen=True)
class BenchmarkProtocol:
    """What to measure: sparsity, optional centered erase, areas, k sweep."""

    n_depth: int = 13620
    ks: tuple[float, ...] = (0.0, 0.3)
    areas: tuple[EvaluationArea, ...] = (EvaluationArea.of("large"),)
    erase: EvaluationArea | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_depth < 2:
            raise ParameterError("protocol needs >= 2 depth samples")
        if not self.ks:
            raise ParameterError("protocol needs at least one k")
        if not self.areas:
            raise ParameterError("protocol needs at least one area")


@dataclass
class BenchmarkResult:
    records: list[BenchmarkRecord]
    failures: list[tuple[str, str]]

    @property
    def ok(self) -> bool:
        return not self.failures


Dataset = Sequence[tuple[str, "np.ndarray | None", DepthMap]]
DenoiserFactory = Callable[[np.ndarray, NoiseSchedule], Denoiser]


def dataset_from_specs(specs: Sequence[SceneSpec]) -> list[tuple[str, np.ndarray, DepthMap]]:
    """Render scene specs into benchmark inputs (scene_id, rgb, gt)."""
    out = []
    for i, spec in enumerate(specs):
        rgb, gt = synth_scene(spec)
        out.append((spec.name or f"scene-{i:03d}", rgb, gt))
    return out


def run_benchmark(
    dataset: Dataset,
    protocol: BenchmarkProtocol,
    config: SteeringConfig,
    denoiser_factory: DenoiserFactory,
    codec: LatentCodec,
    sched: NoiseSchedule | None = None,
    dtype=np.float64,
) -> BenchmarkResult:
    """Evaluate every (scene, k, area) cell plus pixel-weighted aggregates.

    The factory builds one denoiser per scene from the encoded ground-truth
    latent (oracles need it; bridge-backed factories may ignore it).  Runs
    for different k on the same scene share the same sampling and the same
    noise stream, so k is the only varying factor.  Per-scene failures are
    recorded and skipped; aggregates cover the successes.
    """
    dataset = list(dataset)
    if not dataset:
        raise EmptyReportError("empty dataset")
    if sched is None:
        sched = build_schedule(config.steps)
    records: list[BenchmarkRecord] = []
    failures: list[tuple[str, str]] = []
    for idx, (scene_id, rgb, gt) in enumerate(dataset):
        try:
            sample_rng = np.random.default_rng([protocol.seed, idx, 3])
            c = sample_sparse(gt, protocol.n_depth, sample_rng)
            if protocol.erase is not None:
                c = erase_region(c, protocol.erase)
            gt_latent = encode_depth(gt, codec).values.astype(dtype, copy=False)
            denoiser = denoiser_factory(gt_latent, sched)
            masks = [
                (a.kind, area_mask(a, gt.shape) & gt.valid_mask) for a in protocol.areas
            ]
            for k in protocol.ks:
                cfg = replace(config, k=k)
                run_rng = np.random.default_rng([protocol.seed, idx, 7])
                t0 = time.perf_counter()
                d = complete(rgb, c, cfg, denoiser, codec, sched, rng=run_rng, dtype=dtype)
                ms = (time.perf_counter() - t0) * 1e3
                for area_name, mask in masks:
                    m = compute_metrics(d, gt, mask)
                    records.append(
                        BenchmarkRecord(
                            scene_id, area_name, protocol.n_depth, float(k),
                            m.rmse, m.mae, m.rel, m.delta1, m.n_pixels, ms,
                        )
                    )
        except Exception as exc:  # noqa: BLE001 - per-scene isolation is the contract
            failures.append((scene_id, f"{type(exc).__name__}: {exc}"))
    records.extend(aggregate_records(records))
    return BenchmarkResult(records, failures)


def aggregate_records(records: Sequence[BenchmarkRecord]) -> list[BenchmarkRecord]:
    """Pixel-weighted pooling per (area, n_depth, k) across scenes."""
    groups: dict[tuple, list[BenchmarkRecord]] = {}
    for r in records:
        if r.scene_id == "aggregate":
            continue
        groups.setdefault((r.area, r.n_depth, r.k), []).append(r)
    out = []
    for (area, n_depth, k), rs in groups.items():
        n = sum(r.n_pixels for r in rs)
        out.append(
            BenchmarkRecord(
                "aggregate", area, n_depth, k,
                float(np.sqrt(sum(r.rmse**2 * r.n_pixels for r in rs) / n)),
                sum(r.mae * r.n_pixels for r in rs) / n,
                sum(r.rel * r.n_pixels for r in rs) / n,
                sum(r.delta1 * r.n_pixels for r in rs) / n,
                n,
                sum(r.runtime_ms for r in rs),
            )
        )
    return out


def write_records_jsonl(records: Sequence[BenchmarkRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict()) + "\n")


def write_records_csv(records: Sequence[BenchmarkRecord], path) -> None:
    fields = list(BenchmarkRecord.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in records:
            writer.writerow(r.to_dict())
