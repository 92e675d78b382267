"""Command-line surface.

Subcommands: ``complete`` (RGB + sparse depth -> dense depth file),
``benchmark`` (scene directory -> metric reports), ``synth`` (generate
synthetic scenes), ``schedule-dump`` (print schedule tables), and
``bridge-ping`` (handshake check against an external model server).

Exit codes: 0 success; 1 benchmark finished but some scenes failed; 2 usage;
3 bad parameter; 4 shape/range mismatch; 5 invalid data; 6 fit failure;
7 empty condition/evaluation/report; 8 unreadable file; 9 bridge failure;
10 numeric failure; 11 other library error; 70 unexpected internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bridge as bridge_mod
from .codec import IdentityCodec, PoolingCodec, encode_depth
from .ddpm import ScheduleSpec, build_schedule
from .denoisers import (
    AffineBias,
    BiasedOracleDenoiser,
    ComposedBias,
    GaussianBlurBias,
    OracleDenoiser,
    PlaneFitBias,
)
from .errors import (
    BridgeError,
    DataError,
    DegenerateFitError,
    DimensionError,
    EmptyConditionError,
    EmptyEvaluationError,
    EmptyReportError,
    FileFormatError,
    InsufficientDataError,
    NumericError,
    ParameterError,
    RangeError,
    SingularityError,
    SteerkitError,
)
from .evaluation import (
    BenchmarkProtocol,
    EvaluationArea,
    run_benchmark,
    sample_sparse,
    write_records_csv,
    write_records_jsonl,
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
from .scenes import random_scene, synth_scene
from .steering import SteeringConfig, complete

_EXIT_CODES = [
    (ParameterError, 3),
    (DimensionError, 4),
    (RangeError, 4),
    (InsufficientDataError, 6),
    (DegenerateFitError, 6),
    (EmptyConditionError, 7),
    (EmptyEvaluationError, 7),
    (EmptyReportError, 7),
    (FileFormatError, 8),
    (DataError, 5),
    (BridgeError, 9),
    (SingularityError, 10),
    (NumericError, 10),
    (SteerkitError, 11),
]


def exit_code_for(exc: BaseException) -> int:
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 70


def _parse_bias(spec: str):
    """``blur:R`` | ``affine:S,B`` | ``plane`` | ``none``, composable with +."""
    parts = [p.strip() for p in spec.split("+") if p.strip()]
    if not parts:
        raise ParameterError(f"empty bias spec {spec!r}")
    biases = []
    for part in parts:
        name, _, arg = part.partition(":")
        try:
            if name == "none":
                biases.append(GaussianBlurBias(0.0))
            elif name == "blur":
                biases.append(GaussianBlurBias(float(arg)))
            elif name == "affine":
                s, b = arg.split(",")
                biases.append(AffineBias(float(s), float(b)))
            elif name == "plane":
                biases.append(PlaneFitBias())
            else:
                raise ParameterError(f"unknown bias {name!r}")
        except ValueError as exc:
            raise ParameterError(f"bad bias arguments in {part!r}: {exc}") from exc
    return biases[0] if len(biases) == 1 else ComposedBias(*biases)


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    return int(os.environ.get("STEERKIT_SEED", "0"))


def _merged_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = parse_config(args.config, cfg)
    for key in (
        "k", "zeta", "fill_density", "steps", "refit_per_step", "resample_positions",
        "codec", "denoiser", "schedule", "beta_start", "beta_end", "bias",
        "trust", "harmonize_radius", "rgb", "sparse", "gt", "out",
    ):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    cfg.seed = _resolve_seed(cfg.seed)
    return cfg


def _steering_config(cfg: RunConfig) -> SteeringConfig:
    return SteeringConfig(
        k=cfg.k,
        zeta=cfg.zeta,
        fill_density=cfg.fill_density,
        steps=cfg.steps,
        seed=cfg.seed,
        refit_per_step=cfg.refit_per_step,
        resample_positions=cfg.resample_positions,
    )


def _build_schedule(cfg: RunConfig):
    return build_schedule(cfg.steps, ScheduleSpec(cfg.schedule, cfg.beta_start, cfg.beta_end))


def _make_codec(name: str):
    if name == "identity":
        return IdentityCodec()
    if name == "pooling":
        return PoolingCodec()
    raise ParameterError(f"unknown codec {name!r} (use identity, pooling, or bridge)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with run settings")
    p.add_argument("--k", type=float, help="steering strength base factor")
    p.add_argument("--zeta", type=float, help="fill-position distance gate, pixels")
    p.add_argument("--fill-density", dest="fill_density", type=float,
                   help="fill points per zeta x zeta cell")
    p.add_argument("--steps", type=int, help="diffusion steps T")
    p.add_argument("--seed", type=int, help="RNG seed (default: $STEERKIT_SEED or 0)")
    p.add_argument("--refit-per-step", dest="refit_per_step", action="store_const",
                   const=True, help="refit condition scale every step (default)")
    p.add_argument("--freeze-fit", dest="refit_per_step", action="store_const",
                   const=False, help="fit condition scale once and reuse it")
    p.add_argument("--resample-positions", dest="resample_positions",
                   action="store_const", const=True, help="redraw fill positions per step")
    p.add_argument("--codec", choices=["identity", "pooling", "bridge"])
    p.add_argument("--denoiser", choices=["oracle", "biased-oracle", "bridge"])
    p.add_argument("--bias", help="biased-oracle bias: blur:R | affine:S,B | plane | a+b")
    p.add_argument("--trust", type=float, help="biased oracle: trajectory trust weight")
    p.add_argument("--harmonize-radius", dest="harmonize_radius", type=float,
                   help="biased oracle: deviation smoothing sigma, pixels")
    p.add_argument("--schedule", choices=["linear", "scaled_linear"])
    p.add_argument("--beta-start", dest="beta_start", type=float)
    p.add_argument("--beta-end", dest="beta_end", type=float)
    p.add_argument("--float32", action="store_true", help="run the sampler in float32")
    p.add_argument("--bridge", help="model server: host:port or stdio:<command>")


def _denoiser_and_codec(cfg: RunConfig, args, image_shape):
    """Build (denoiser, codec, session) per the configured choices."""
    session = None
    if cfg.denoiser == "bridge" or cfg.codec == "bridge":
        if not getattr(args, "bridge", None):
            raise ParameterError("--bridge host:port or stdio:<command> is required")
        session = bridge_mod.open_session(args.bridge)
        session.handshake(image_shape)
    codec = bridge_mod.BridgeCodec(session) if cfg.codec == "bridge" else _make_codec(cfg.codec)
    sched = session.schedule if session is not None else _build_schedule(cfg)
    if cfg.denoiser == "bridge":
        denoiser = bridge_mod.BridgeDenoiser(session)
    else:
        if not cfg.gt:
            raise ParameterError(f"denoiser {cfg.denoiser!r} needs --gt ground truth")
        gt = read_depth(cfg.gt)
        latent = encode_depth(gt, codec).values
        if cfg.denoiser == "oracle":
            denoiser = OracleDenoiser(latent, sched)
        elif cfg.denoiser == "biased-oracle":
            denoiser = BiasedOracleDenoiser(
                latent, _parse_bias(cfg.bias), sched,
                trust=cfg.trust, harmonize_radius=cfg.harmonize_radius,
            )
        else:
            raise ParameterError(f"unknown denoiser {cfg.denoiser!r}")
    return denoiser, codec, sched, session


def _cmd_complete(args) -> int:
    cfg = _merged_config(args)
    if not cfg.rgb or not cfg.sparse or not cfg.out:
        raise ParameterError("complete needs --rgb, --sparse and --out")
    cfg.check_paths()
    rgb = read_rgb(cfg.rgb)
    _, height, width = rgb.shape
    c = read_sparse(cfg.sparse, height, width)
    denoiser, codec, sched, session = _denoiser_and_codec(cfg, args, rgb.shape)
    try:
        cfg.steps = sched.T
        steering = _steering_config(cfg)
        dtype = np.float32 if args.float32 else np.float64
        d = complete(rgb, c, steering, denoiser, codec, sched, dtype=dtype)
        write_depth(d, cfg.out)
    finally:
        if session is not None:
            session.shutdown()
    print(f"wrote {cfg.out} ({height}x{width}, k={steering.k}, steps={sched.T})")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = _merged_config(args)
    dataset = load_scene_dir(args.scenes)
    if not dataset:
        raise EmptyReportError(f"no scenes found in {args.scenes}")
    areas = tuple(EvaluationArea.of(a.strip()) for a in args.areas.split(","))
    ks = tuple(float(x) for x in args.ks.split(","))
    erase = None if args.erase in (None, "none") else EvaluationArea.of(args.erase)
    protocol = BenchmarkProtocol(
        n_depth=args.n_depth, ks=ks, areas=areas, erase=erase, seed=cfg.seed
    )
    codec = _make_codec(cfg.codec)
    sched = _build_schedule(cfg)
    if cfg.denoiser == "oracle":
        factory = lambda latent, s: OracleDenoiser(latent, s)  # noqa: E731
    elif cfg.denoiser == "biased-oracle":
        bias = _parse_bias(cfg.bias)
        factory = lambda latent, s: BiasedOracleDenoiser(  # noqa: E731
            latent, bias, s, trust=cfg.trust, harmonize_radius=cfg.harmonize_radius
        )
    else:
        raise ParameterError("benchmark supports oracle and biased-oracle denoisers")
    steering = _steering_config(cfg)
    dtype = np.float32 if args.float32 else np.float64
    result = run_benchmark(dataset, protocol, steering, factory, codec, sched, dtype=dtype)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records_jsonl(result.records, out_dir / "reports.jsonl")
    write_records_csv(result.records, out_dir / "reports.csv")
    for r in result.records:
        if r.scene_id == "aggregate":
            print(
                f"aggregate area={r.area} k={r.k:g} rmse={r.rmse:.4f} "
                f"mae={r.mae:.4f} rel={r.rel:.4f} delta1={r.delta1:.4f}"
            )
    for scene_id, message in result.failures:
        print(f"FAILED {scene_id}: {message}", file=sys.stderr)
    print(f"wrote {out_dir / 'reports.jsonl'} and {out_dir / 'reports.csv'}")
    return 0 if result.ok else 1


def _cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args.seed)
    for i in range(args.count):
        spec = random_scene(seed + i, args.height, args.width, args.camera)
        rgb, gt = synth_scene(spec)
        write_rgb(rgb, out_dir / f"{spec.name}.rgb.png")
        write_depth(gt, out_dir / f"{spec.name}.depth.npy")
        if args.sparse > 0:
            rng = np.random.default_rng([seed, i, 3])
            write_sparse(
                sample_sparse(gt, args.sparse, rng), out_dir / f"{spec.name}.sparse.csv"
            )
        print(f"wrote {out_dir / spec.name}.rgb.png / .depth.npy")
    return 0


def _cmd_schedule_dump(args) -> int:
    cfg = _merged_config(args)
    sched = _build_schedule(cfg)
    print(f"# kind={cfg.schedule} T={sched.T} beta=[{cfg.beta_start:g}, {cfg.beta_end:g}]")
    print("t\tbeta\talpha\talpha_bar\tsigma")
    for t in range(1, sched.T + 1):
        sigma = float(np.sqrt(sched.sigma2[t]))
        print(
            f"{t}\t{sched.beta[t]:.6f}\t{sched.alpha[t]:.6f}"
            f"\t{sched.alpha_bar[t]:.6f}\t{sigma:.6f}"
        )
    return 0


def _cmd_bridge_ping(args) -> int:
    session = bridge_mod.open_session(args.bridge)
    with session:
        session.handshake((3, args.height, args.width))
        sched = session.schedule
        print(
            f"ok: T={sched.T} beta=[{sched.beta[1]:g}..{sched.beta[sched.T]:g}] "
            f"latent={session.latent_shape} image={session.image_shape}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steerkit",
        description="Depth completion by steering a diffusion sampler with sparse depth.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="complete sparse depth to a dense depth file")
    p.add_argument("--rgb", help="input RGB image")
    p.add_argument("--sparse", help="input sparse depth CSV (row,col,depth_m)")
    p.add_argument("--out", help="output depth file (.npy meters or .png millimeters)")
    p.add_argument("--gt", help="ground-truth depth file (oracle denoisers only)")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("benchmark", help="run the metric suite over a scene directory")
    p.add_argument("--scenes", required=True, help="directory of *.depth.npy/.png scenes")
    p.add_argument("--out-dir", default="reports", help="where to write reports")
    p.add_argument("--n-depth", dest="n_depth", type=int, default=13620)
    p.add_argument("--ks", default="0,0.3", help="comma-separated steering factors")
    p.add_argument("--areas", default="large", help="comma-separated: large,medium,small")
    p.add_argument("--erase", default="none", help="erase area: none, large, medium, small")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("synth", help="generate synthetic scenes")
    p.add_argument("--out-dir", default="scenes")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--height", type=int, default=448)
    p.add_argument("--width", type=int, default=608)
    p.add_argument("--camera", choices=["pinhole", "orthographic"], default="pinhole")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sparse", type=int, default=0,
                   help="also write a sparse CSV with this many samples")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("schedule-dump", help="print the noise schedule tables")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_schedule_dump)

    p = sub.add_parser("bridge-ping", help="handshake with a model server")
    p.add_argument("--bridge", required=True, help="host:port or stdio:<command>")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.set_defaults(func=_cmd_bridge_ping)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SteerkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 70
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 70


if __name__ == "__main__":
    sys.exit(main())
