"""File formats: depth rasters, sparse CSV, RGB images, flat config files.

Depth files are either 16-bit grayscale PNG in millimeters (the common
RGB-D dataset convention; zero = invalid, 1 mm quantization) or ``.npy``
float arrays in meters (lossless).  Sparse depth is CSV ``row,col,depth_m``
with a header line.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DuplicatePositionError,
    FileFormatError,
    NonpositiveDepthError,
    OutOfBoundsError,
    ParameterError,
    RangeError,
)
from .types import DepthMap, SparseDepth

__all__ = [
    "read_depth",
    "write_depth",
    "read_sparse",
    "write_sparse",
    "read_rgb",
    "write_rgb",
    "RunConfig",
    "parse_config",
    "load_scene_dir",
]

_MM_MAX = np.iinfo(np.uint16).max


def read_depth(path) -> DepthMap:
    """Load a depth grid; format chosen by extension (.png mm, .npy m)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        try:
            values = np.load(path)
        except (ValueError, EOFError, OSError) as exc:
            raise FileFormatError(f"cannot read {path}: {exc}") from exc
        if values.ndim != 2:
            raise FileFormatError(f"{path}: expected 2D depth array, got {values.shape}")
        return DepthMap(values.astype(np.float64), metric=True)
    if suffix == ".png":
        try:
            with Image.open(path) as img:
                raw = np.asarray(img)
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise FileFormatError(f"cannot read {path}: {exc}") from exc
        if raw.ndim != 2:
            raise FileFormatError(f"{path}: depth PNG must be single-channel")
        return DepthMap(raw.astype(np.float64) / 1000.0, metric=True)
    raise FileFormatError(f"unsupported depth format {suffix!r} (use .png or .npy)")


def write_depth(d: DepthMap, path) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        np.save(path, d.values)
        return
    if suffix == ".png":
        mm = np.round(d.values * 1000.0)
        if mm.min() < 0:
            raise RangeError("negative depth cannot be written as millimeter PNG")
        if mm.max() > _MM_MAX:
            raise RangeError(
                f"depth {d.values.max():.3f} m exceeds the 16-bit millimeter range"
            )
        Image.fromarray(mm.astype(np.uint16)).save(path)
        return
    raise FileFormatError(f"unsupported depth format {suffix!r} (use .png or .npy)")


def read_sparse(path, height: int, width: int) -> SparseDepth:
    """Parse ``row,col,depth_m`` CSV (with header) into a SparseDepth."""
    rows, cols, depths = [], [], []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise FileFormatError(f"{path}: empty file")
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != 3:
                    raise FileFormatError(
                        f"{path}:{lineno}: expected 3 fields, got {len(rec)}"
                    )
                try:
                    r, c, z = int(rec[0]), int(rec[1]), float(rec[2])
                except ValueError as exc:
                    raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
                if not (0 <= r < height and 0 <= c < width):
                    raise OutOfBoundsError(
                        f"{path}:{lineno}: ({r}, {c}) outside {height}x{width}"
                    )
                if not (z > 0 and np.isfinite(z)):
                    raise NonpositiveDepthError(
                        f"{path}:{lineno}: depth must be positive, got {z}"
                    )
                rows.append(r)
                cols.append(c)
                depths.append(z)
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    flat = np.asarray(rows, dtype=np.int64) * width + np.asarray(cols, dtype=np.int64)
    unique, counts = np.unique(flat, return_counts=True)
    if len(unique) != len(flat):
        dup = unique[counts > 1][0]
        raise DuplicatePositionError(
            f"{path}: duplicate position ({dup // width}, {dup % width})"
        )
    return SparseDepth(np.asarray(rows), np.asarray(cols), np.asarray(depths), height, width)


def write_sparse(c: SparseDepth, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "depth_m"])
        for r, col, z in zip(c.rows, c.cols, c.depths):
            writer.writerow([int(r), int(col), repr(float(z))])


def read_rgb(path) -> np.ndarray:
    """Load an RGB image as channel-first float in [0, 1]."""
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    return arr.transpose(2, 0, 1)


def write_rgb(rgb: np.ndarray, path) -> None:
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[0] != 3:
        raise FileFormatError(f"rgb must be (3, H, W), got {rgb.shape}")
    bytes_ = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(bytes_.transpose(1, 2, 0)).save(path)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    """Flat run settings; mirrors the CLI flags one-to-one."""

    k: float = 0.3
    zeta: float = 7.0
    fill_density: float = 1.0
    steps: int = 50
    seed: int | None = None  # None: fall back to $STEERKIT_SEED, then 0
    refit_per_step: bool = True
    resample_positions: bool = False
    codec: str = "identity"
    denoiser: str = "oracle"
    schedule: str = "linear"
    beta_start: float = 1e-4
    beta_end: float = 0.02
    bias: str = "none"
    trust: float = 0.0
    harmonize_radius: float = 0.0
    rgb: str = ""
    sparse: str = ""
    gt: str = ""
    out: str = ""

    _FLOATS = ("k", "zeta", "fill_density", "beta_start", "beta_end", "trust", "harmonize_radius")
    _INTS = ("steps", "seed")
    _BOOLS = ("refit_per_step", "resample_positions")
    _STRS = ("codec", "denoiser", "schedule", "bias", "rgb", "sparse", "gt", "out")
    _PATHS = ("rgb", "sparse", "gt")

    def set(self, key: str, raw: str) -> None:
        if key in self._FLOATS:
            setattr(self, key, float(raw))
        elif key in self._INTS:
            setattr(self, key, int(raw))
        elif key in self._BOOLS:
            low = raw.strip().lower()
            if low not in _TRUE | _FALSE:
                raise FileFormatError(f"bad boolean {raw!r} for {key}")
            setattr(self, key, low in _TRUE)
        elif key in self._STRS:
            setattr(self, key, raw.strip())
        else:
            raise FileFormatError(f"unknown config key {key!r}")

    def check_paths(self) -> None:
        for key in self._PATHS:
            value = getattr(self, key)
            if value and not os.path.exists(value):
                raise ParameterError(f"{key} path does not exist: {value}")


def parse_config(path, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; later keys win."""
    cfg = base if base is not None else RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FileFormatError(f"{path}:{lineno}: expected key = value")
        key, _, raw = line.partition("=")
        try:
            cfg.set(key.strip(), raw.strip())
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
    return cfg


def load_scene_dir(path) -> list[tuple[str, "np.ndarray | None", DepthMap]]:
    """Collect benchmark scenes from a directory.

    A scene is a ground-truth depth file ``<id>.depth.npy`` or
    ``<id>.depth.png`` with an optional sibling ``<id>.rgb.png``.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileFormatError(f"not a directory: {root}")
    scenes = []
    for depth_path in sorted(root.glob("*.depth.npy")) + sorted(root.glob("*.depth.png")):
        scene_id = depth_path.name.rsplit(".depth.", 1)[0]
        if any(s[0] == scene_id for s in scenes):
            continue  # .npy takes precedence over .png for the same id
        gt = read_depth(depth_path)
        rgb_path = root / f"{scene_id}.rgb.png"
        rgb = read_rgb(rgb_path) if rgb_path.exists() else None
        scenes.append((scene_id, rgb, gt))
    return scenes
