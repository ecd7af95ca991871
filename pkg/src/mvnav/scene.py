"""Multiview color+depth sequences: loading, synthetic generation, cameras.

Color frames are (H, W, 3) uint8 arrays.  Depth is stored as 16-bit codes
linear in inverse depth: code 65535 maps to z_near, code 0 to z_far.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import BadCalibration, DegenerateSpec, DimensionMismatch, MissingFile

MAX_BLOCK = 16
DEPTH_CODE_MAX = 65535


# ---------------------------------------------------------------------------
# cameras

@dataclass(frozen=True)
class CameraParams:
    """Pinhole camera: x_cam = R @ X_world + t, pixel ~ K @ x_cam / z."""

    intrinsic: np.ndarray   # 3x3
    rotation: np.ndarray    # 3x3, world -> camera
    translation: np.ndarray  # 3-vector
    id: int = -1

    def __post_init__(self):
        k = np.asarray(self.intrinsic, dtype=np.float64)
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if k.shape != (3, 3) or r.shape != (3, 3):
            raise BadCalibration("camera matrices must be 3x3")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9:
            raise BadCalibration(f"rotation of camera {self.id} is not orthonormal")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise BadCalibration("focal entries must be positive")
        if any(abs(k[i, j]) > 0 for i, j in ((1, 0), (2, 0), (2, 1))):
            raise BadCalibration("intrinsic lower triangle must be zero")
        for a in (k, r, t):
            a.setflags(write=False)
        object.__setattr__(self, "intrinsic", k)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation


def interpolate_camera(left: CameraParams, right: CameraParams,
                       alpha: float) -> CameraParams:
    """Virtual camera between two adjacent reference cameras.

    Intrinsics and translation are interpolated linearly; rotation by
    normalized quaternion lerp (adjacent rig rotations are near identical,
    so nlerp and slerp agree far below depth-quantization noise).
    """
    if alpha == 0.0:
        return left
    if alpha == 1.0:
        return right
    k = (1 - alpha) * left.intrinsic + alpha * right.intrinsic
    t = (1 - alpha) * left.translation + alpha * right.translation
    ql = Rotation.from_matrix(left.rotation).as_quat()
    qr = Rotation.from_matrix(right.rotation).as_quat()
    if np.dot(ql, qr) < 0:
        qr = -qr
    q = (1 - alpha) * ql + alpha * qr
    q = q / np.linalg.norm(q)
    r = Rotation.from_quat(q).as_matrix()
    # re-orthonormalize so the orthonormality invariant holds to 1e-9
    u, _, vt = np.linalg.svd(r)
    r = u @ vt
    return CameraParams(intrinsic=k, rotation=r, translation=t, id=-1)


# ---------------------------------------------------------------------------
# depth codes

def depth_from_code(code, z_near: float, z_far: float):
    """Decode 16-bit codes to metric depth (linear in 1/z)."""
    c = np.asarray(code, dtype=np.float64)
    inv = 1.0 / z_far + (c / DEPTH_CODE_MAX) * (1.0 / z_near - 1.0 / z_far)
    return 1.0 / inv


def code_from_depth(z, z_near: float, z_far: float):
    """Encode metric depth to 16-bit codes, clipping to the valid range."""
    z = np.asarray(z, dtype=np.float64)
    frac = (1.0 / z - 1.0 / z_far) / (1.0 / z_near - 1.0 / z_far)
    code = np.rint(frac * DEPTH_CODE_MAX)
    return np.clip(code, 0, DEPTH_CODE_MAX).astype(np.uint16)


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel 16-bit quantized inverse-depth codes."""

    codes: np.ndarray       # (H, W) uint16
    z_near: float
    z_far: float

    def __post_init__(self):
        if not (0 < self.z_near < self.z_far):
            raise DegenerateSpec("need 0 < z_near < z_far")
        c = np.ascontiguousarray(self.codes, dtype=np.uint16)
        c.setflags(write=False)
        object.__setattr__(self, "codes", c)

    def to_metric(self) -> np.ndarray:
        return depth_from_code(self.codes, self.z_near, self.z_far)


# ---------------------------------------------------------------------------
# view grid

@dataclass(frozen=True)
class ViewGrid:
    """Reference views plus evenly spaced virtual views between them."""

    n_ref_views: int
    n_intermediate: int

    @property
    def total_views(self) -> int:
        return self.n_ref_views + (self.n_ref_views - 1) * self.n_intermediate

    def is_reference(self, v: int) -> bool:
        return v % (self.n_intermediate + 1) == 0

    def ref_index(self, v: int) -> int:
        assert self.is_reference(v)
        return v // (self.n_intermediate + 1)

    def view_of_ref(self, ref: int) -> int:
        return ref * (self.n_intermediate + 1)

    def bracketing_refs(self, v: int) -> tuple[int, int]:
        """Reference *view indices* left/right of v (equal for reference views)."""
        step = self.n_intermediate + 1
        if self.is_reference(v):
            return v, v
        lo = (v // step) * step
        return lo, lo + step

    def alpha(self, v: int) -> float:
        step = self.n_intermediate + 1
        return (v % step) / step

    def camera_for(self, v: int, ref_cameras: list[CameraParams]) -> CameraParams:
        step = self.n_intermediate + 1
        if self.is_reference(v):
            return ref_cameras[v // step]
        lo = v // step
        return interpolate_camera(ref_cameras[lo], ref_cameras[lo + 1], self.alpha(v))


# ---------------------------------------------------------------------------
# sequences

@dataclass
class MultiviewSequence:
    cameras: list            # CameraParams per view, left to right
    colors: list             # colors[v][t] -> (H, W, 3) uint8
    depths: list             # depths[v][t] -> DepthMap
    width: int
    height: int
    fps: float
    z_near: float
    z_far: float

    @property
    def n_views(self) -> int:
        return len(self.cameras)

    @property
    def n_frames(self) -> int:
        return len(self.colors[0])

    def validate(self):
        if self.width <= 0 or self.height <= 0:
            raise DimensionMismatch("non-positive frame size")
        if self.width % MAX_BLOCK or self.height % MAX_BLOCK:
            raise DimensionMismatch(
                f"frame size must be a multiple of {MAX_BLOCK}")
        nf = self.n_frames
        for v in range(self.n_views):
            if len(self.colors[v]) != nf or len(self.depths[v]) != nf:
                raise DimensionMismatch("views disagree on frame count")
            for t in range(nf):
                if self.colors[v][t].shape != (self.height, self.width, 3):
                    raise DimensionMismatch(f"color {v},{t} has wrong shape")
                if self.depths[v][t].codes.shape != (self.height, self.width):
                    raise DimensionMismatch(f"depth {v},{t} has wrong shape")
        return self


# ---------------------------------------------------------------------------
# PPM / PGM io

def write_ppm(path, img: np.ndarray):
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    magic, w, h, maxv, off = _parse_pnm_header(data, path)
    if magic != b"P6" or maxv != 255:
        raise DimensionMismatch(f"{path}: expected binary 8-bit PPM")
    img = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=off)
    return img.reshape(h, w, 3).copy()


def write_pgm16(path, codes: np.ndarray):
    codes = np.ascontiguousarray(codes, dtype=np.uint16)
    h, w = codes.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode())
        f.write(codes.astype(">u2").tobytes())


def read_pgm16(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    magic, w, h, maxv, off = _parse_pnm_header(data, path)
    if magic != b"P5" or maxv != 65535:
        raise DimensionMismatch(f"{path}: expected binary 16-bit PGM")
    img = np.frombuffer(data, dtype=">u2", count=w * h, offset=off)
    return img.reshape(h, w).astype(np.uint16)


def _parse_pnm_header(data: bytes, path):
    m = re.match(rb"(P[56])\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise DimensionMismatch(f"{path}: malformed PNM header")
    return m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4)), m.end()


# ---------------------------------------------------------------------------
# manifest loading

def load_sequence(manifest_path) -> MultiviewSequence:
    """Load a sequence described by a JSON manifest.

    The manifest names a camera calibration file plus per-view color (PPM)
    and depth (16-bit PGM) file patterns with {view} and {frame} holes.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingFile(str(manifest_path))
    meta = json.loads(manifest_path.read_text())
    root = manifest_path.parent
    w, h = int(meta["width"]), int(meta["height"])
    n_views, n_frames = int(meta["n_views"]), int(meta["n_frames"])
    z_near, z_far = float(meta["z_near"]), float(meta["z_far"])

    cam_path = root / meta["camera_file"]
    if not cam_path.exists():
        raise MissingFile(str(cam_path))
    cameras = load_cameras(cam_path, n_views)

    colors, depths = [], []
    for v in range(n_views):
        cv, dv = [], []
        for t in range(n_frames):
            cp = root / meta["color_pattern"].format(view=v, frame=t)
            dp = root / meta["depth_pattern"].format(view=v, frame=t)
            if not cp.exists():
                raise MissingFile(str(cp))
            if not dp.exists():
                raise MissingFile(str(dp))
            cv.append(read_ppm(cp))
            dv.append(DepthMap(read_pgm16(dp), z_near, z_far))
        colors.append(cv)
        depths.append(dv)

    seq = MultiviewSequence(cameras=cameras, colors=colors, depths=depths,
                            width=w, height=h, fps=float(meta["fps"]),
                            z_near=z_near, z_far=z_far)
    return seq.validate()


def load_cameras(path, n_views: int) -> list[CameraParams]:
    """Plain text, 21 whitespace-separated numbers per camera, row-major:
    9 intrinsic, 9 rotation, 3 translation."""
    vals = np.loadtxt(path).reshape(-1)
    if vals.size != 21 * n_views:
        raise BadCalibration(
            f"{path}: expected {21 * n_views} values, got {vals.size}")
    cams = []
    for v in range(n_views):
        chunk = vals[21 * v:21 * (v + 1)]
        cams.append(CameraParams(intrinsic=chunk[:9].reshape(3, 3),
                                 rotation=chunk[9:18].reshape(3, 3),
                                 translation=chunk[18:21], id=v))
    return cams


def save_sequence(seq: MultiviewSequence, out_dir,
                  color_pattern="color_v{view}_t{frame}.ppm",
                  depth_pattern="depth_v{view}_t{frame}.pgm") -> Path:
    """Write a sequence plus manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cam_lines = []
    for cam in seq.cameras:
        nums = np.concatenate([cam.intrinsic.ravel(), cam.rotation.ravel(),
                               cam.translation])
        cam_lines.append(" ".join(repr(float(x)) for x in nums))
    (out / "cameras.txt").write_text("\n".join(cam_lines) + "\n")
    for v in range(seq.n_views):
        for t in range(seq.n_frames):
            write_ppm(out / color_pattern.format(view=v, frame=t),
                      seq.colors[v][t])
            write_pgm16(out / depth_pattern.format(view=v, frame=t),
                        seq.depths[v][t].codes)
    meta = {"width": seq.width, "height": seq.height, "n_views": seq.n_views,
            "n_frames": seq.n_frames, "fps": seq.fps, "z_near": seq.z_near,
            "z_far": seq.z_far, "camera_file": "cameras.txt",
            "color_pattern": color_pattern, "depth_pattern": depth_pattern}
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return mpath


# ---------------------------------------------------------------------------
# synthetic scenes

@dataclass(frozen=True)
class RectSpec:
    """Fronto-parallel textured rectangle at constant depth z, moving linearly."""

    x: float
    y: float
    w: float
    h: float
    z: float
    vx: float = 0.0
    vy: float = 0.0
    texel: float = 0.0   # world-size of one texture cell; 0 -> w/16


@dataclass(frozen=True)
class SceneSpec:
    width: int = 128
    height: int = 128
    n_views: int = 3
    n_frames: int = 8
    fps: float = 15.0
    baseline: float = 0.5
    focal: float = 0.0   # 0 -> width pixels
    z_near: float = 2.0
    z_far: float = 50.0
    rects: tuple = ()


def _rect_texture(ix, iy, channel_seed, base, amp):
    """Deterministic blocky texture from integer cell coordinates."""
    h = (ix * np.int64(2654435761) + iy * np.int64(40503)
         + np.int64(channel_seed) * 97) & np.int64(0xFFFFFFFF)
    h = (h ^ (h >> 13)) * np.int64(1274126177) & np.int64(0xFFFFFFFF)
    v = ((h >> 16) & 0xFF).astype(np.float64) / 255.0
    return np.clip(base + amp * (v - 0.5), 0, 255)


def generate_synthetic_scene(spec: SceneSpec, seed: int) -> MultiviewSequence:
    """Render a deterministic rectangles-at-depths scene for all views.

    Cameras sit on the x axis, spaced by `baseline`, identity rotation and
    shared intrinsics, so occlusion geometry is exactly computable.  Pixels
    covered by no rectangle fall back to a dark z_far background.
    """
    if not spec.rects:
        raise DegenerateSpec("scene needs at least one rectangle")
    for r in spec.rects:
        if r.z <= 0:
            raise DegenerateSpec("rectangle depth must be positive")
        if not (spec.z_near <= r.z <= spec.z_far):
            raise DegenerateSpec("rectangle depth outside [z_near, z_far]")
    if not (0 < spec.z_near < spec.z_far):
        raise DegenerateSpec("need 0 < z_near < z_far")

    w, h = spec.width, spec.height
    f = spec.focal if spec.focal > 0 else float(w)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    k = np.array([[f, 0, cx], [0, f, cy], [0, 0, 1]], dtype=np.float64)

    rng = np.random.default_rng(seed)
    styles = []
    for r in spec.rects:
        styles.append({
            "base": rng.uniform(60, 200, size=3),
            "amp": rng.uniform(90, 160),
            "seed": int(rng.integers(1, 2**31 - 1)),
            "texel": r.texel if r.texel > 0 else max(r.w, r.h) / 16.0,
        })

    order = np.argsort([r.z for r in spec.rects], kind="stable")  # near first

    us, vs = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    cameras = [CameraParams(intrinsic=k, rotation=np.eye(3),
                            translation=np.array([-v * spec.baseline, 0.0, 0.0]),
                            id=v)
               for v in range(spec.n_views)]

    colors, depths = [], []
    for v in range(spec.n_views):
        cam_x = v * spec.baseline
        cv, dv = [], []
        for t in range(spec.n_frames):
            img = np.full((h, w, 3), 32, dtype=np.uint8)
            zmap = np.full((h, w), spec.z_far, dtype=np.float64)
            painted = np.zeros((h, w), dtype=bool)
            for i in order:
                r = spec.rects[i]
                st = styles[i]
                xw = (us - cx) * r.z / f + cam_x
                yw = (vs - cy) * r.z / f
                rx, ry = r.x + r.vx * t, r.y + r.vy * t
                inside = ((xw >= rx) & (xw <= rx + r.w)
                          & (yw >= ry) & (yw <= ry + r.h) & ~painted)
                if not inside.any():
                    continue
                ix = np.floor((xw[inside] - rx) / st["texel"]).astype(np.int64)
                iy = np.floor((yw[inside] - ry) / st["texel"]).astype(np.int64)
                for ch in range(3):
                    img[..., ch][inside] = np.rint(
                        _rect_texture(ix, iy, st["seed"] + ch,
                                      st["base"][ch], st["amp"])).astype(np.uint8)
                zmap[inside] = r.z
                painted |= inside
            cv.append(img)
            dv.append(DepthMap(code_from_depth(zmap, spec.z_near, spec.z_far),
                               spec.z_near, spec.z_far))
        colors.append(cv)
        depths.append(dv)

    seq = MultiviewSequence(cameras=cameras, colors=colors, depths=depths,
                            width=w, height=h, fps=spec.fps,
                            z_near=spec.z_near, z_far=spec.z_far)
    return seq.validate()


def default_scene_spec(width=128, height=128, n_views=3, n_frames=8,
                       seed: int = 0) -> SceneSpec:
    """A desk-scale scene: background plane, two static layers, one mover."""
    rng = np.random.default_rng(seed)
    span = 3.0 * width / 128.0
    rects = [
        RectSpec(x=-40, y=-40, w=80, h=80, z=20.0, texel=1.2),  # background
        RectSpec(x=float(rng.uniform(-2.5, -0.5)), y=-1.6, w=2.2, h=2.4,
                 z=8.0, texel=0.22),
        RectSpec(x=float(rng.uniform(0.0, 1.2)), y=-1.0, w=1.8, h=2.0,
                 z=5.0, vx=float(rng.uniform(0.02, 0.06)), texel=0.16),
        RectSpec(x=float(rng.uniform(-0.8, 0.2)), y=0.2, w=1.2, h=1.0,
                 z=3.5, vx=float(rng.uniform(-0.05, -0.02)), texel=0.12),
    ]
    del span
    return SceneSpec(width=width, height=height, n_views=n_views,
                     n_frames=n_frames, rects=tuple(rects))
