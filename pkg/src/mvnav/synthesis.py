"""Virtual view synthesis and residual side-frames.

Two synthesis paths share the projection core:

* the decoder-model path (`noncomplex_vvs`): block projection from decoded
  reference data, no hole filling;
* the server path (`complex_vvs`): dense projection from original data,
  two-view fusion and depth-aware inpainting.  Its output is the target
  quality a client should reach.

The residual between the two, with holes contributing value 0, is the
side-frame a client adds back to the cheap synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .projection import (BlockDepthMap, ProjectedImage, ProjectionStats,
                         downsample_depth, fuse_projections, project_view,
                         validate_block_size)
from .scene import CameraParams, DepthMap


@dataclass(frozen=True)
class SynthesisConfig:
    block_size: int = 8
    n_refs: int = 2
    inpaint_max_iters: int = 4096

    def __post_init__(self):
        validate_block_size(self.block_size)
        if self.n_refs not in (1, 2):
            raise DimensionMismatch("n_refs must be 1 or 2")


@dataclass
class EFrame:
    """Residual between complex and non-complex synthesis of one frame."""

    residual: np.ndarray        # (H, W, 3) int16 in [-255, 255]
    frame_id: tuple             # (view, time)
    block_size: int
    ref_pair: tuple             # (left reference view, right reference view)


BACKGROUND_DEPTH_TOLERANCE = 0.10
HOLE_FILL_GRAY = 128

_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def inpaint(img: ProjectedImage, max_iters: int = 4096) -> np.ndarray:
    """Fill holes by background-biased neighbor averaging.

    Sweeps the image in raster order, filling in place: a hole pixel with at
    least one non-hole 8-neighbor takes the average of the neighbors whose
    depth is within 10% of the deepest neighbor, and inherits that depth.
    A fully-hole image fills with mid-gray.
    """
    frame, _, _ = inpaint_with_stats(img, max_iters)
    return frame


def simple_inpaint(img: ProjectedImage, max_iters: int = 4096) -> np.ndarray:
    """Plain neighbor averaging without the background preference (the
    client-side fallback used by the no-side-frame baselines)."""
    frame, _, _ = inpaint_with_stats(img, max_iters, depth_aware=False)
    return frame


def inpaint_with_stats(img: ProjectedImage, max_iters: int = 4096,
                       depth_aware: bool = True):
    """Inpaint and report (frame, pixels_filled, sweeps)."""
    h, w = img.hole_mask.shape
    pixels = img.pixels.astype(np.float64).copy()
    zbuf = img.zbuf.copy()
    holes = img.hole_mask.copy()

    if holes.all():
        out = np.full((h, w, 3), HOLE_FILL_GRAY, dtype=np.uint8)
        return out, h * w, 1

    filled_total = 0
    sweeps = 0
    while holes.any():
        if sweeps >= max_iters:
            raise RuntimeError("inpainting did not converge")
        sweeps += 1
        ys, xs = np.nonzero(holes)
        progressed = False
        for y, x in zip(ys.tolist(), xs.tolist()):
            if not holes[y, x]:
                continue
            zs, cols = [], []
            for dy, dx in _NEIGHBORS:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and not holes[ny, nx]:
                    zs.append(zbuf[ny, nx])
                    cols.append(pixels[ny, nx])
            if not zs:
                continue
            zmax = max(zs)
            if depth_aware:
                keep = [c for zz, c in zip(zs, cols)
                        if zz >= (1.0 - BACKGROUND_DEPTH_TOLERANCE) * zmax]
            else:
                keep = cols
            avg = np.mean(keep, axis=0)
            pixels[y, x] = np.floor(avg + 0.5)
            zbuf[y, x] = zmax
            holes[y, x] = False
            filled_total += 1
            progressed = True
        if not progressed:   # unreachable: any hole region has a boundary
            raise RuntimeError("inpainting stalled")
    return pixels.astype(np.uint8), filled_total, sweeps


def noncomplex_vvs(refs: list[tuple[np.ndarray, BlockDepthMap, CameraParams]],
                   target: CameraParams, cfg: SynthesisConfig
                   ) -> tuple[ProjectedImage, ProjectionStats]:
    """Decoder-model synthesis: block projection, optional fusion, no fill.

    `refs` carries decoded color + block depth + camera per reference view.
    """
    if len(refs) != cfg.n_refs:
        raise DimensionMismatch(f"expected {cfg.n_refs} references")
    stats = ProjectionStats()
    projected = []
    for color, bdm, cam in refs:
        if bdm.b != cfg.block_size:
            raise DimensionMismatch("depth block size disagrees with config")
        proj, st = project_view(color, bdm, cam, target)
        stats += st
        projected.append(proj)
    if len(projected) == 1:
        return projected[0], stats
    dl = float(np.linalg.norm(target.center - refs[0][2].center))
    dr = float(np.linalg.norm(target.center - refs[1][2].center))
    fused = fuse_projections(projected[0], projected[1], dl, dr)
    stats.fusion_blends += int(
        (~projected[0].hole_mask & ~projected[1].hole_mask).sum())
    return fused, stats


def complex_vvs(orig_refs: list[tuple[np.ndarray, DepthMap, CameraParams]],
                target: CameraParams, max_iters: int = 4096) -> np.ndarray:
    """Server-side target synthesis: dense projection from both originals,
    inverse-distance fusion, then depth-aware inpainting."""
    if len(orig_refs) != 2:
        raise DimensionMismatch("complex synthesis uses both bracketing references")
    projected = []
    for color, depth, cam in orig_refs:
        bdm = downsample_depth(depth, 1)
        proj, _ = project_view(color, bdm, cam, target)
        projected.append(proj)
    dl = float(np.linalg.norm(target.center - orig_refs[0][2].center))
    dr = float(np.linalg.norm(target.center - orig_refs[1][2].center))
    fused = fuse_projections(projected[0], projected[1], dl, dr)
    return inpaint(fused, max_iters)


def make_eframe(noncomplex_out: ProjectedImage, complex_out: np.ndarray,
                frame_id: tuple, block_size: int, ref_pair: tuple) -> EFrame:
    """Residual = complex minus non-complex, holes counting as value 0, so
    the side-frame carries occlusion content outright."""
    if complex_out.shape != noncomplex_out.pixels.shape:
        raise DimensionMismatch("synthesis outputs differ in size")
    base = noncomplex_out.pixels.astype(np.int16).copy()
    base[noncomplex_out.hole_mask] = 0
    residual = complex_out.astype(np.int16) - base
    return EFrame(residual=residual, frame_id=tuple(frame_id),
                  block_size=block_size, ref_pair=tuple(ref_pair))


def apply_eframe(noncomplex_out: ProjectedImage,
                 residual: np.ndarray) -> np.ndarray:
    """Decoder-side enhancement: add the residual, clamp to [0, 255].
    This is the whole correction step; no inpainting runs here."""
    if residual.shape != noncomplex_out.pixels.shape:
        raise DimensionMismatch("residual does not match frame size")
    base = noncomplex_out.pixels.astype(np.int32).copy()
    base[noncomplex_out.hole_mask] = 0
    out = base + residual.astype(np.int32)
    return np.clip(out, 0, 255).astype(np.uint8)
