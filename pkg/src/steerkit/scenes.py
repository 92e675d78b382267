"""Synthetic scene rendering: analytic primitives to (RGB, ground-truth depth).

Scenes are z-buffered from analytic ray intersections, so every depth value
has a closed-form oracle.  Two camera models: pinhole (depth varies as the
reciprocal of an affine function over a tilted plane) and orthographic
(depth over a tilted plane is exactly affine in (row, col), which is what
the affine-reproduction tests want).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError
from .types import DepthMap

__all__ = [
    "Camera",
    "Plane",
    "Sphere",
    "Box",
    "SceneSpec",
    "synth_scene",
    "random_scene",
]

_LIGHT = np.array([0.35, -0.45, -0.82])
_LIGHT = _LIGHT / np.linalg.norm(_LIGHT)


@dataclass(frozen=True)
class Camera:
    """Ray generator.  ``fx``/``fy`` are pixels per unit of (x/z, y/z) for
    the pinhole model, pixels per meter for the orthographic one."""

    kind: str
    height: int
    width: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.kind not in ("pinhole", "orthographic"):
            raise ParameterError(f"unknown camera kind {self.kind!r}")
        if self.height <= 0 or self.width <= 0:
            raise ParameterError("camera dims must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ParameterError("focal scales must be positive")

    @classmethod
    def pinhole(cls, height: int, width: int, fov_deg: float = 60.0) -> "Camera":
        f = 0.5 * width / np.tan(np.radians(fov_deg) / 2)
        return cls("pinhole", height, width, f, f, (width - 1) / 2, (height - 1) / 2)

    @classmethod
    def orthographic(cls, height: int, width: int, px_per_m: float = 120.0) -> "Camera":
        return cls(
            "orthographic", height, width, px_per_m, px_per_m,
            (width - 1) / 2, (height - 1) / 2,
        )

    def ray_grids(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-pixel (u, v) ray parameters: direction slopes for pinhole
        rays (origin 0, direction (u, v, 1)), lateral origin coordinates for
        orthographic rays (origin (u, v, 0), direction (0, 0, 1))."""
        cols = (np.arange(self.width) - self.cx) / self.fx
        rows = (np.arange(self.height) - self.cy) / self.fy
        u, v = np.meshgrid(cols, rows)
        return u, v


@dataclass(frozen=True)
class Plane:
    """Infinite plane n . X = offset, normal as a 3-vector (x, y, z)."""

    normal: tuple[float, float, float]
    offset: float

    def trace(self, cam: Camera) -> tuple[np.ndarray, np.ndarray]:
        nx, ny, nz = self.normal
        norm = np.sqrt(nx * nx + ny * ny + nz * nz)
        if norm == 0:
            raise ParameterError("plane normal must be nonzero")
        u, v = cam.ray_grids()
        with np.errstate(divide="ignore", invalid="ignore"):
            if cam.kind == "pinhole":
                z = self.offset / (nx * u + ny * v + nz)
            else:
                z = (self.offset - nx * u - ny * v) / nz
        z = np.where(np.isfinite(z) & (z > 0), z, np.inf)
        n_unit = np.array([nx, ny, nz]) / norm
        normals = np.broadcast_to(n_unit[:, None, None], (3,) + z.shape)
        return z, normals


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ParameterError(f"sphere radius must be positive, got {self.radius}")

    def trace(self, cam: Camera) -> tuple[np.ndarray, np.ndarray]:
        px, py, pz = self.center
        r2 = self.radius * self.radius
        u, v = cam.ray_grids()
        if cam.kind == "pinhole":
            a = u * u + v * v + 1.0
            b = -2.0 * (u * px + v * py + pz)
            disc = b * b - 4.0 * a * (px * px + py * py + pz * pz - r2)
            with np.errstate(invalid="ignore"):
                z = (-b - np.sqrt(disc)) / (2.0 * a)
            hit_x, hit_y = u * z, v * z
        else:
            q = r2 - (u - px) ** 2 - (v - py) ** 2
            with np.errstate(invalid="ignore"):
                z = pz - np.sqrt(q)
            hit_x, hit_y = u, v
        z = np.where(np.isfinite(z) & (z > 0), z, np.inf)
        safe_z = np.where(np.isfinite(z), z, 1.0)
        normals = np.stack([hit_x - px, hit_y - py, safe_z - pz]) / self.radius
        return z, normals


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by its two opposite corners."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ParameterError("box lo must be strictly below hi on every axis")

    def trace(self, cam: Camera) -> tuple[np.ndarray, np.ndarray]:
        u, v = cam.ray_grids()
        if cam.kind == "pinhole":
            origin = (np.zeros_like(u), np.zeros_like(u), np.zeros_like(u))
            direction = (u, v, np.ones_like(u))
        else:
            origin = (u, v, np.zeros_like(u))
            zero = np.zeros_like(u)
            direction = (zero, zero, np.ones_like(u))
        t_near = np.full(u.shape, -np.inf)
        t_far = np.full(u.shape, np.inf)
        near_axis = np.zeros(u.shape, dtype=np.int8)
        near_sign = np.ones(u.shape)
        for axis in range(3):
            o, d = origin[axis], direction[axis]
            lo, hi = self.lo[axis], self.hi[axis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (lo - o) / d
                t2 = (hi - o) / d
            parallel = d == 0
            inside = (o >= lo) & (o <= hi)
            t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
            t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
            closer = t_lo > t_near
            near_axis = np.where(closer, axis, near_axis)
            near_sign = np.where(closer, -np.sign(d), near_sign)
            t_near = np.maximum(t_near, t_lo)
            t_far = np.minimum(t_far, t_hi)
        hit = (t_near <= t_far) & (t_near > 0)
        z = np.where(hit, t_near * direction[2] + origin[2], np.inf)
        normals = np.zeros((3,) + u.shape)
        for axis in range(3):
            normals[axis] = np.where(near_axis == axis, near_sign, 0.0)
        return z, normals


@dataclass(frozen=True)
class SceneSpec:
    primitives: tuple
    camera: Camera
    texture_seed: int = 0
    name: str = ""


def synth_scene(
    spec: SceneSpec, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, DepthMap]:
    """Render ``(rgb, depth)``; rgb is channel-first (3, H, W) in [0, 1].

    Depth is the z-buffer minimum over the primitives' analytic
    intersections; every pixel must be covered.  Shading is Lambertian with
    per-primitive albedo drawn from ``texture_seed`` (or the given rng).
    """
    if not spec.primitives:
        raise ParameterError("scene needs at least one primitive")
    if rng is None:
        rng = np.random.default_rng(spec.texture_seed)
    cam = spec.camera
    depths = np.empty((len(spec.primitives), cam.height, cam.width))
    normals = np.empty((len(spec.primitives), 3, cam.height, cam.width))
    for i, prim in enumerate(spec.primitives):
        depths[i], normals[i] = prim.trace(cam)
    winner = depths.argmin(axis=0)
    depth = np.take_along_axis(depths, winner[None], axis=0)[0]
    if not np.all(np.isfinite(depth)):
        raise DataError("scene leaves pixels uncovered; add a backdrop plane")
    if depth.min() <= 0:
        raise DataError("scene produced nonpositive depth")

    albedo = 0.25 + 0.65 * rng.random((len(spec.primitives), 3))
    n = np.take_along_axis(normals, winner[None, None], axis=0)[0]
    lambert = np.abs(np.einsum("chw,c->hw", n, -_LIGHT))
    intensity = 0.25 + 0.75 * lambert
    rgb = albedo[winner].transpose(2, 0, 1) * intensity[None]
    return np.clip(rgb, 0.0, 1.0), DepthMap(depth, metric=True)


def random_scene(
    index: int,
    height: int = 448,
    width: int = 608,
    camera_kind: str = "pinhole",
    name: str = "",
) -> SceneSpec:
    """Deterministic scene generator: backdrop and tilted planes plus a few
    spheres and boxes spread around the view center, all positive-depth."""
    rng = np.random.default_rng([982451653, index])
    if camera_kind == "pinhole":
        cam = Camera.pinhole(height, width)
    else:
        cam = Camera.orthographic(height, width, px_per_m=min(height, width) / 4.0)
    # Frame half-extents in ray-parameter units: direction slopes for the
    # pinhole camera, meters for the orthographic one.
    half_u = 0.5 * width / cam.fx
    half_v = 0.5 * height / cam.fy

    def lateral(z: float) -> tuple[float, float]:
        # Spread objects over the whole frame (a hair past the edges so some
        # are border-cut); keeps near and far depth structure present in
        # every image region instead of clustering at the view center.
        su = float(rng.uniform(-1.05 * half_u, 1.05 * half_u))
        sv = float(rng.uniform(-1.05 * half_v, 1.05 * half_v))
        if cam.kind == "pinhole":
            return su * z, sv * z
        return su, sv

    prims: list = [Plane((0.0, 0.0, 1.0), float(rng.uniform(6.0, 8.0)))]
    tilt = rng.uniform(-0.22, 0.22, size=2)
    z0 = rng.uniform(4.2, 5.8)
    # Normal (tx, ty, 1) scaled so the central ray hits at depth z0.
    prims.append(Plane((float(tilt[0]), float(tilt[1]), 1.0), float(z0)))
    for _ in range(int(rng.integers(2, 5))):
        z = float(rng.uniform(2.2, 5.0))
        x, y = lateral(z)
        prims.append(Sphere((x, y, z), float(rng.uniform(0.35, 0.9))))
    for _ in range(int(rng.integers(2, 5))):
        z = float(rng.uniform(2.4, 5.2))
        x, y = lateral(z)
        half = rng.uniform(0.25, 0.75, size=3)
        prims.append(
            Box(
                (x - half[0], y - half[1], z - half[2]),
                (x + half[0], y + half[1], z + half[2]),
            )
        )
    return SceneSpec(
        tuple(prims), cam, texture_seed=index, name=name or f"scene-{index:03d}"
    )
