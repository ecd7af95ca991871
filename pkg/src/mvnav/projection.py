"""Depth-image-based rendering by block displacement.

A source frame is cut into b x b blocks; each block's depth code yields one
displacement (unproject the block center, reproject into the target camera,
round to integer pixels) and the whole block is copied by that displacement.
b = 1 is the dense per-pixel case.  Destination conflicts are resolved by a
z-buffer keeping the smaller target-camera depth; ties keep the block that
comes first in scan order, so outputs are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .scene import CameraParams, DepthMap, depth_from_code

BLOCK_SIZES = (1, 4, 8, 16)


def validate_block_size(b: int):
    if b not in BLOCK_SIZES:
        raise DimensionMismatch(f"block size {b} not in {BLOCK_SIZES}")


@dataclass
class ProjectionStats:
    point_projections: int = 0
    pixels_copied: int = 0
    fusion_blends: int = 0

    def __iadd__(self, other: "ProjectionStats"):
        self.point_projections += other.point_projections
        self.pixels_copied += other.pixels_copied
        self.fusion_blends += other.fusion_blends
        return self


@dataclass
class ProjectedImage:
    pixels: np.ndarray      # (H, W, 3) uint8, zero on holes
    hole_mask: np.ndarray   # (H, W) bool, True where nothing landed
    zbuf: np.ndarray        # (H, W) float64, +inf on holes

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def copy(self) -> "ProjectedImage":
        return ProjectedImage(self.pixels.copy(), self.hole_mask.copy(),
                              self.zbuf.copy())


@dataclass(frozen=True)
class BlockDepthMap:
    """Depth codes at one code per b x b block (b = 1: dense)."""

    codes: np.ndarray       # (H/b, W/b) uint16
    b: int
    z_near: float
    z_far: float

    def to_metric(self) -> np.ndarray:
        return depth_from_code(self.codes, self.z_near, self.z_far)


def downsample_depth(d: DepthMap, b: int) -> BlockDepthMap:
    """One code per block: the lower median of the b x b codes."""
    validate_block_size(b)
    h, w = d.codes.shape
    if h % b or w % b:
        raise DimensionMismatch(f"block size {b} does not divide {w}x{h}")
    if b == 1:
        return BlockDepthMap(d.codes, 1, d.z_near, d.z_far)
    blocks = d.codes.reshape(h // b, b, w // b, b).transpose(0, 2, 1, 3)
    flat = np.sort(blocks.reshape(h // b, w // b, b * b), axis=-1)
    med = flat[..., (b * b - 1) // 2]   # lower median for even counts
    return BlockDepthMap(med, b, d.z_near, d.z_far)


def project_view(src_color: np.ndarray, src_depth: BlockDepthMap,
                 src_cam: CameraParams, dst_cam: CameraParams
                 ) -> tuple[ProjectedImage, ProjectionStats]:
    """Warp a source frame into the target camera at block granularity."""
    h, w = src_color.shape[:2]
    b = src_depth.b
    bh, bw = h // b, w // b
    if src_depth.codes.shape != (bh, bw):
        raise DimensionMismatch("block depth map does not match frame size")

    # block centers in source pixel coordinates
    jx, jy = np.meshgrid(np.arange(bw), np.arange(bh))
    u_c = jx * b + (b - 1) / 2.0
    v_c = jy * b + (b - 1) / 2.0
    z = src_depth.to_metric().ravel()

    kinv = np.linalg.inv(src_cam.intrinsic)
    rays = kinv @ np.stack([u_c.ravel(), v_c.ravel(),
                            np.ones(bh * bw)], axis=0)
    p_cam = rays * z
    world = src_cam.rotation.T @ (p_cam - src_cam.translation[:, None])
    q = dst_cam.rotation @ world + dst_cam.translation[:, None]
    z2 = q[2]
    ok = z2 > 1e-9
    uv = dst_cam.intrinsic @ q
    with np.errstate(divide="ignore", invalid="ignore"):
        u2 = uv[0] / z2
        v2 = uv[1] / z2
    du = np.rint(u2 - u_c.ravel()).astype(np.int64)
    dv = np.rint(v2 - v_c.ravel()).astype(np.int64)

    stats = ProjectionStats(point_projections=bh * bw)

    # expand block displacements to per-pixel source/destination coordinates
    px, py = np.meshgrid(np.arange(b), np.arange(b))
    sx = (jx.ravel()[:, None] * b + px.ravel()[None, :])   # (nblocks, b*b)
    sy = (jy.ravel()[:, None] * b + py.ravel()[None, :])
    dx = sx + du[:, None]
    dy = sy + dv[:, None]
    valid = ok[:, None] & (dx >= 0) & (dx < w) & (dy >= 0) & (dy < h)

    order = np.broadcast_to(np.arange(bh * bw)[:, None], dx.shape)[valid]
    zpix = np.broadcast_to(z2[:, None], dx.shape)[valid]
    dest = (dy[valid] * w + dx[valid]).astype(np.int64)
    srci = (sy[valid] * w + sx[valid]).astype(np.int64)

    stats.pixels_copied = int(valid.sum())

    out = np.zeros((h, w, 3), dtype=np.uint8)
    zbuf = np.full(h * w, np.inf)
    holes = np.ones(h * w, dtype=bool)
    if dest.size:
        # keep, per destination, the smallest z; ties -> earliest scan order
        sel = np.lexsort((order, zpix, dest))
        dsorted = dest[sel]
        first = np.ones(dsorted.size, dtype=bool)
        first[1:] = dsorted[1:] != dsorted[:-1]
        win = sel[first]
        flat = src_color.reshape(-1, 3)
        out.reshape(-1, 3)[dest[win]] = flat[srci[win]]
        zbuf[dest[win]] = zpix[win]
        holes[dest[win]] = False
    return (ProjectedImage(out, holes.reshape(h, w), zbuf.reshape(h, w)),
            stats)


def fuse_projections(left: ProjectedImage, right: ProjectedImage,
                     left_dist: float, right_dist: float) -> ProjectedImage:
    """Merge two projections by inverse-distance weighting.

    Pixels defined in both images are blended with weights proportional to
    1/distance and rounded; pixels defined in one image pass through; holes
    stay holes.  A zero distance means the target coincides with that
    reference camera, which then takes full weight.
    """
    if left.pixels.shape != right.pixels.shape:
        raise DimensionMismatch("fusion inputs differ in size")
    if left_dist < 0 or right_dist < 0 or (left_dist == 0 and right_dist == 0):
        raise DimensionMismatch("reference distances must be positive")
    if left_dist == 0:
        wl = 1.0
    elif right_dist == 0:
        wl = 0.0
    else:
        wl = (1.0 / left_dist) / (1.0 / left_dist + 1.0 / right_dist)

    both = ~left.hole_mask & ~right.hole_mask
    only_l = ~left.hole_mask & right.hole_mask
    only_r = left.hole_mask & ~right.hole_mask

    out = np.zeros_like(left.pixels)
    blend = (wl * left.pixels[both].astype(np.float64)
             + (1.0 - wl) * right.pixels[both].astype(np.float64))
    out[both] = np.floor(blend + 0.5).astype(np.uint8)
    out[only_l] = left.pixels[only_l]
    out[only_r] = right.pixels[only_r]

    zbuf = np.minimum(left.zbuf, right.zbuf)
    holes = left.hole_mask & right.hole_mask
    zbuf[holes] = np.inf
    return ProjectedImage(out, holes, zbuf)
