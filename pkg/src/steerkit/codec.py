"""Latent codecs: pixel-space <-> latent-space maps standing in for a VAE.

The depth convention: a single-channel depth grid is replicated to three
channels before encoding, and decoding averages the three reconstructed
channels back into one grid.

Two built-in codecs bracket the behavior of a learned autoencoder:

* :class:`IdentityCodec` - latent space equals pixel space; exact round trip,
  used wherever tests need bit-level control.
* :class:`PoolingCodec` - 8x spatial bottleneck.  Encoding keeps per-block
  mean, fitted row/col slopes and pooled Laplacian of the channel mean;
  decoding bilinearly upsamples the block means and extrapolates the border
  band with the fitted slopes.  The round trip is exact on linear ramps and
  lossy on everything else, which is the property the steering loop has to
  survive.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import DimensionError
from .types import DepthMap, LatentSample

__all__ = ["LatentCodec", "IdentityCodec", "PoolingCodec", "encode_depth", "decode_depth"]


class LatentCodec:
    """Contract: ``decode(encode(x))`` approximates ``x`` within ``tolerance``
    on smooth inputs; spatial dims must divide evenly by ``scale_factor``."""

    scale_factor: int = 1
    latent_channels: int = 3
    tolerance: float = 0.0

    def encode(self, image: np.ndarray) -> LatentSample:
        raise NotImplementedError

    def decode(self, latent: LatentSample) -> np.ndarray:
        raise NotImplementedError

    def check_dims(self, height: int, width: int) -> None:
        f = self.scale_factor
        if height % f or width % f:
            raise DimensionError(
                f"dims ({height}, {width}) not divisible by scale factor {f}"
            )


class IdentityCodec(LatentCodec):
    """Latent space is pixel space; three channels pass through unchanged."""

    scale_factor = 1
    latent_channels = 3
    tolerance = 0.0

    def encode(self, image: np.ndarray) -> LatentSample:
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[0] != 3:
            raise DimensionError(f"expected (3, H, W) image, got {image.shape}")
        return LatentSample(image.copy(), timestep=0)

    def decode(self, latent: LatentSample) -> np.ndarray:
        if latent.channels != 3:
            raise DimensionError(f"expected 3 latent channels, got {latent.channels}")
        return latent.values.copy()


class PoolingCodec(LatentCodec):
    """Lossy 8x average-pooling codec with slope-aware reconstruction."""

    scale_factor = 8
    latent_channels = 4
    tolerance = 0.01

    def encode(self, image: np.ndarray) -> LatentSample:
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3 or image.shape[0] != 3:
            raise DimensionError(f"expected (3, H, W) image, got {image.shape}")
        _, h, w = image.shape
        self.check_dims(h, w)
        f = self.scale_factor
        m = image.mean(axis=0)
        blocks = m.reshape(h // f, f, w // f, f)
        ch0 = blocks.mean(axis=(1, 3))
        # Least-squares slopes inside each block; offsets are centered pixel
        # coordinates, so the denominator is sum(d^2) over the block.
        offs = np.arange(f, dtype=np.float64) - (f - 1) / 2.0
        denom = float((offs**2).sum() * f)
        ch_row = np.einsum("ijkl,j->ik", blocks, offs) / denom
        ch_col = np.einsum("ijkl,l->ik", blocks, offs) / denom
        lap = ndimage.laplace(m)
        ch_lap = lap.reshape(h // f, f, w // f, f).mean(axis=(1, 3))
        return LatentSample(np.stack([ch0, ch_row, ch_col, ch_lap]), timestep=0)

    def decode(self, latent: LatentSample) -> np.ndarray:
        if latent.channels != 4:
            raise DimensionError(f"expected 4 latent channels, got {latent.channels}")
        ch0, ch_row, ch_col, _ = latent.values.astype(np.float64)
        f = self.scale_factor
        h, w = ch0.shape[0] * f, ch0.shape[1] * f
        half = (f - 1) / 2.0
        # Pixel -> block-center lattice coordinates.
        row_lat = (np.arange(h) - half) / f
        col_lat = (np.arange(w) - half) / f
        rr, cc = np.meshgrid(row_lat, col_lat, indexing="ij")
        base = ndimage.map_coordinates(ch0, [rr, cc], order=1, mode="nearest")
        # Beyond the outermost block centers map_coordinates clamps; extend
        # linearly there using the edge block's fitted slopes.
        over_r = np.clip(row_lat, None, 0.0) + np.clip(row_lat - (ch0.shape[0] - 1), 0.0, None)
        over_c = np.clip(col_lat, None, 0.0) + np.clip(col_lat - (ch0.shape[1] - 1), 0.0, None)
        idx_r = np.clip(np.round(rr).astype(int), 0, ch0.shape[0] - 1)
        idx_c = np.clip(np.round(cc).astype(int), 0, ch0.shape[1] - 1)
        base = base + over_r[:, None] * f * ch_row[idx_r, idx_c]
        base = base + over_c[None, :] * f * ch_col[idx_r, idx_c]
        return np.broadcast_to(base, (3, h, w)).copy()


def encode_depth(d: DepthMap, codec: LatentCodec) -> LatentSample:
    """Replicate a depth grid to three channels and encode it."""
    codec.check_dims(d.height, d.width)
    tripled = np.broadcast_to(d.values, (3,) + d.values.shape).copy()
    return codec.encode(tripled)


def decode_depth(x: LatentSample, codec: LatentCodec, metric: bool = False) -> DepthMap:
    """Decode a latent and average the three channels into one depth grid."""
    image = codec.decode(x)
    if image.shape[0] != 3:
        raise DimensionError(f"decoded image must have 3 channels, got {image.shape[0]}")
    a, b, c = image
    # Delta-form mean: bit-exact when the channels agree, which keeps the
    # identity codec's declared zero tolerance honest.
    mean = a + (b - a) / 3.0 + (c - a) / 3.0
    return DepthMap(mean, metric=metric)
