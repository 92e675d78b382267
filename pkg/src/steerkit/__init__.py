"""Depth completion by steering a pretrained diffusion sampler with sparse
metric depth, plus the synthetic-scene evaluation harness around it.

The pipeline: a DDPM reverse process runs in a latent space defined by a
codec; after every reverse step the latent is nudged toward a version of the
current clean estimate whose linear component honors the sparse condition;
the final relative depth is mapped to meters by a least-squares scale/shift
fit against the condition.  Denoisers are pluggable (test oracles in
process, real models behind a byte protocol).
"""

from .alignment import AffineDepthTransform, align, align_condition, fit_scale_shift
from .bridge import (
    BridgeCodec,
    BridgeDenoiser,
    BridgeSession,
    LoopbackBridgeServer,
    open_session,
    serve_stream,
)
from .codec import IdentityCodec, LatentCodec, PoolingCodec, decode_depth, encode_depth
from .ddpm import (
    NoiseSchedule,
    ScheduleSpec,
    add_noise,
    build_schedule,
    clean_from_eps,
    clean_from_v,
    reverse_step,
)
from .denoisers import (
    AffineBias,
    BiasedOracleDenoiser,
    ComposedBias,
    Denoiser,
    GaussianBlurBias,
    OracleDenoiser,
    PlaneFitBias,
    biased_oracle_predict,
    oracle_predict,
)
from .errors import (
    BridgeConnectionError,
    BridgeError,
    DataError,
    DegenerateFitError,
    DimensionError,
    DuplicatePositionError,
    EmptyConditionError,
    EmptyEvaluationError,
    EmptyReportError,
    FileFormatError,
    InsufficientDataError,
    NonpositiveDepthError,
    NumericError,
    OutOfBoundsError,
    ParameterError,
    ProtocolError,
    RangeError,
    RemoteError,
    SingularityError,
    SteerkitError,
)
from .evaluation import (
    AREA_DIMS,
    BenchmarkProtocol,
    BenchmarkRecord,
    BenchmarkResult,
    EvaluationArea,
    MetricsReport,
    aggregate_records,
    area_mask,
    compute_metrics,
    dataset_from_specs,
    erase_region,
    run_benchmark,
    sample_sparse,
    write_records_csv,
    write_records_jsonl,
)
from .geometry import (
    GridInterpolator,
    distance_to_condition,
    interpolate_scattered,
    phi1,
    phi2,
    select_positions,
)
from .io import (
    RunConfig,
    load_scene_dir,
    parse_config,
    read_depth,
    read_rgb,
    read_sparse,
    write_depth,
    write_rgb,
    write_sparse,
)
from .scenes import Box, Camera, Plane, SceneSpec, Sphere, random_scene, synth_scene
from .steering import SteeringConfig, complete, lambda_at, steer_step
from .types import DepthMap, LatentSample, SamplingPositions, SparseDepth

__version__ = "0.1.0"

__all__ = [
    "AREA_DIMS",
    "AffineBias",
    "AffineDepthTransform",
    "BenchmarkProtocol",
    "BenchmarkRecord",
    "BenchmarkResult",
    "BiasedOracleDenoiser",
    "Box",
    "BridgeCodec",
    "BridgeConnectionError",
    "BridgeDenoiser",
    "BridgeError",
    "BridgeSession",
    "Camera",
    "ComposedBias",
    "DataError",
    "DegenerateFitError",
    "Denoiser",
    "DepthMap",
    "DimensionError",
    "DuplicatePositionError",
    "EmptyConditionError",
    "EmptyEvaluationError",
    "EmptyReportError",
    "EvaluationArea",
    "FileFormatError",
    "GaussianBlurBias",
    "GridInterpolator",
    "IdentityCodec",
    "InsufficientDataError",
    "LatentCodec",
    "LatentSample",
    "LoopbackBridgeServer",
    "MetricsReport",
    "NoiseSchedule",
    "NonpositiveDepthError",
    "NumericError",
    "OracleDenoiser",
    "OutOfBoundsError",
    "ParameterError",
    "Plane",
    "PlaneFitBias",
    "PoolingCodec",
    "ProtocolError",
    "RangeError",
    "RemoteError",
    "RunConfig",
    "SamplingPositions",
    "SceneSpec",
    "ScheduleSpec",
    "SingularityError",
    "SparseDepth",
    "Sphere",
    "SteerkitError",
    "SteeringConfig",
    "add_noise",
    "aggregate_records",
    "align",
    "align_condition",
    "area_mask",
    "biased_oracle_predict",
    "build_schedule",
    "clean_from_eps",
    "clean_from_v",
    "compute_metrics",
    "complete",
    "dataset_from_specs",
    "decode_depth",
    "distance_to_condition",
    "encode_depth",
    "erase_region",
    "fit_scale_shift",
    "interpolate_scattered",
    "lambda_at",
    "load_scene_dir",
    "open_session",
    "oracle_predict",
    "parse_config",
    "phi1",
    "phi2",
    "random_scene",
    "read_depth",
    "read_rgb",
    "read_sparse",
    "reverse_step",
    "run_benchmark",
    "sample_sparse",
    "select_positions",
    "serve_stream",
    "steer_step",
    "synth_scene",
    "write_depth",
    "write_records_csv",
    "write_records_jsonl",
    "write_rgb",
    "write_sparse",
]
