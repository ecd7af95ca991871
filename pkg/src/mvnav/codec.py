"""Deterministic intra block-transform codec.

Per 8x8 block and channel: orthonormal 2-D DCT-II, uniform quantization
round(c/q), zigzag scan, (run, level) pairs coded with exponential-Golomb
order 0, end-of-block = run 63.  Payloads are byte aligned per frame and
carry a tiny header {kind:2, q-index:6, width/16:8, height/16:8 bits}.

Planes whose dimensions are not a multiple of 16 (block depth maps at
large block sizes) are edge-padded up to 16 before coding; the unpadded
shape travels in the EncodedFrame and decode crops back.

The same machinery codes 8-bit color frames, 16-bit depth planes and
signed residual planes; a closed-loop I/P mode handles reference GOPs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadDimensions, CorruptStream

KIND_CODES = {"intra": 0, "predicted": 1, "residual": 2}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
EOB_RUN = 63
GOP_SIZES = (1, 2, 4, 8, 16, 32)

DEFAULT_STEPS = (4, 8, 12, 16, 24, 32, 48, 64)


@dataclass(frozen=True)
class QuantLadder:
    steps: tuple = DEFAULT_STEPS

    def __post_init__(self):
        s = tuple(int(x) for x in self.steps)
        if not s or any(x < 1 for x in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise BadDimensions("ladder must be strictly increasing, all >= 1")
        if len(s) > 64:
            raise BadDimensions("ladder cannot exceed 64 steps (6-bit index)")
        object.__setattr__(self, "steps", s)

    def index(self, q: int) -> int:
        try:
            return self.steps.index(q)
        except ValueError:
            raise BadDimensions(f"step {q} not on the ladder {self.steps}") from None


DEFAULT_LADDER = QuantLadder()


@dataclass(frozen=True)
class GopStructure:
    gop_size: int = 8

    def __post_init__(self):
        if self.gop_size not in GOP_SIZES:
            raise BadDimensions(f"gop size must be one of {GOP_SIZES}")


@dataclass
class EncodedFrame:
    payload: bytes
    bits: int
    kind: str
    q: int
    frame_id: tuple | None = None
    channels: int = 3
    width: int = 0          # unpadded plane width
    height: int = 0


# ---------------------------------------------------------------------------
# transform tables

def _dct_matrix() -> np.ndarray:
    n = np.arange(8)
    c = np.cos(np.pi * (2 * n[None, :] + 1) * n[:, None] / 16.0) * np.sqrt(0.25)
    c[0, :] = np.sqrt(0.125)
    return c


_DCT = _dct_matrix()


def _zigzag_order() -> np.ndarray:
    idx = []
    for s in range(15):
        rng = range(max(0, s - 7), min(s, 7) + 1)
        cells = [(i, s - i) for i in rng]
        if s % 2 == 0:
            cells.reverse()
        idx.extend(r * 8 + c for r, c in cells)
    return np.array(idx, dtype=np.int64)


_ZIGZAG = _zigzag_order()
_UNZIGZAG = np.argsort(_ZIGZAG)


# ---------------------------------------------------------------------------
# bits

def _ue_bits(n: int) -> str:
    m = n + 1
    k = m.bit_length()
    return "0" * (k - 1) + format(m, "b")


def _se_bits(s: int) -> str:
    n = 2 * s - 1 if s > 0 else -2 * s
    return _ue_bits(n)


class _BitReader:
    def __init__(self, payload: bytes):
        self.bits = bin(int.from_bytes(payload, "big"))[2:].zfill(len(payload) * 8) \
            if payload else ""
        self.pos = 0

    def read_fixed(self, n: int) -> int:
        if self.pos + n > len(self.bits):
            raise CorruptStream("payload truncated")
        v = int(self.bits[self.pos:self.pos + n], 2)
        self.pos += n
        return v

    def read_ue(self) -> int:
        one = self.bits.find("1", self.pos)
        if one < 0:
            raise CorruptStream("malformed Golomb code")
        k = one - self.pos
        end = one + k + 1
        if end > len(self.bits):
            raise CorruptStream("malformed Golomb code")
        v = int(self.bits[one:end], 2) - 1
        self.pos = end
        return v

    def read_se(self) -> int:
        n = self.read_ue()
        return (n + 1) // 2 if n % 2 else -(n // 2)


# ---------------------------------------------------------------------------
# plane <-> coefficients

def _quantize(coefs: np.ndarray, q: int) -> np.ndarray:
    a = coefs / q
    return (np.sign(a) * np.floor(np.abs(a) + 0.5)).astype(np.int64)


def _pad16(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % 16
    pw = (-w) % 16
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return (plane.reshape(h // 8, 8, w // 8, 8)
            .transpose(0, 2, 1, 3).reshape(-1, 8, 8))


def _from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return (blocks.reshape(h // 8, w // 8, 8, 8)
            .transpose(0, 2, 1, 3).reshape(h, w))


def _encode_plane(parts: list, plane: np.ndarray, q: int):
    blocks = _to_blocks(plane.astype(np.float64))
    coefs = np.einsum("ij,njk,lk->nil", _DCT, blocks, _DCT)
    levels = _quantize(coefs, q).reshape(-1, 64)[:, _ZIGZAG]
    # a lone nonzero at zigzag index 63 would need run 63 = EOB; drop it
    lone = (levels[:, 63] != 0) & (np.count_nonzero(levels, axis=1) == 1)
    if lone.any():
        levels[lone, 63] = 0
    for row in levels:
        nz = np.nonzero(row)[0]
        prev = -1
        for pos in nz.tolist():
            parts.append(_ue_bits(pos - prev - 1))
            parts.append(_se_bits(int(row[pos])))
            prev = pos
        parts.append(_ue_bits(EOB_RUN))


def _decode_plane(reader: _BitReader, h: int, w: int, q: int,
                  lo: float, hi: float) -> np.ndarray:
    nblocks = (h // 8) * (w // 8)
    levels = np.zeros((nblocks, 64), dtype=np.int64)
    for bi in range(nblocks):
        pos = -1
        while True:
            run = reader.read_ue()
            if run == EOB_RUN:
                break
            pos += run + 1
            if pos > 63:
                raise CorruptStream("block overrun")
            level = reader.read_se()
            if level == 0:
                raise CorruptStream("zero level in run-length pair")
            levels[bi, pos] = level
    coefs = (levels[:, _UNZIGZAG] * q).reshape(-1, 8, 8).astype(np.float64)
    blocks = np.einsum("ji,njk,kl->nil", _DCT, coefs, _DCT)
    plane = _from_blocks(blocks, h, w)
    plane = np.floor(plane + 0.5)
    return np.clip(plane, lo, hi)


# ---------------------------------------------------------------------------
# frame API

def encode_intra(img: np.ndarray, q: int, ladder: QuantLadder = DEFAULT_LADDER,
                 kind: str = "intra", frame_id: tuple | None = None
                 ) -> EncodedFrame:
    """Encode an (H, W) plane or (H, W, C) frame; any integer-valued dtype."""
    if img.ndim == 2:
        planes = [img]
    elif img.ndim == 3:
        planes = [img[..., c] for c in range(img.shape[2])]
    else:
        raise BadDimensions("expected a 2-D plane or (H, W, C) frame")
    h, w = planes[0].shape
    if h % 8 or w % 8 or h == 0 or w == 0:
        raise BadDimensions("plane dimensions must be positive multiples of 8")
    padded = [_pad16(np.asarray(p)) for p in planes]
    ph, pw = padded[0].shape
    if pw // 16 > 255 or ph // 16 > 255:
        raise BadDimensions("frame too large for the 8-bit header fields")

    parts = [format(KIND_CODES[kind], "02b"), format(ladder.index(q), "06b"),
             format(pw // 16, "08b"), format(ph // 16, "08b")]
    for p in padded:
        _encode_plane(parts, p, q)
    bitstring = "".join(parts)
    bits = len(bitstring)
    nbytes = (bits + 7) // 8
    pad = nbytes * 8 - bits
    payload = int(bitstring + "0" * pad, 2).to_bytes(nbytes, "big") \
        if bits else b""
    return EncodedFrame(payload=payload, bits=bits, kind=kind, q=q,
                        frame_id=frame_id, channels=len(planes),
                        width=w, height=h)


def decode_intra(e: EncodedFrame, ladder: QuantLadder = DEFAULT_LADDER,
                 value_range: tuple = (0, 255)) -> np.ndarray:
    """Exact inverse of `encode_intra`; output dtype follows `value_range`."""
    reader = _BitReader(e.payload)
    kind = reader.read_fixed(2)
    q_index = reader.read_fixed(6)
    pw = reader.read_fixed(8) * 16
    ph = reader.read_fixed(8) * 16
    if kind not in KIND_NAMES or pw == 0 or ph == 0:
        raise CorruptStream("bad frame header")
    if q_index >= len(ladder.steps):
        raise CorruptStream("q index beyond ladder")
    q = ladder.steps[q_index]
    lo, hi = value_range
    planes = [_decode_plane(reader, ph, pw, q, lo, hi)
              for _ in range(e.channels)]
    h = e.height or ph
    w = e.width or pw
    out = np.stack(planes, axis=-1)[:h, :w] if e.channels > 1 \
        else planes[0][:h, :w]
    if lo >= 0 and hi <= 255:
        return out.astype(np.uint8)
    if lo >= 0 and hi <= 65535:
        return out.astype(np.uint16)
    return out.astype(np.int16)


RESIDUAL_RANGE = (-255, 255)
DIFF_RANGE = (-255, 255)
DEPTH_RANGE = (0, 65535)


def encode_gop(frames: list[np.ndarray], gop: GopStructure, q: int,
               ladder: QuantLadder = DEFAULT_LADDER, view: int | None = None
               ) -> list[EncodedFrame]:
    """Closed-loop I/P coding: intra frames every gop_size frames, P frames
    coded as the intra-style difference from the previous *decoded* frame."""
    if not frames:
        raise BadDimensions("empty frame list")
    out = []
    prev = None
    for t, frame in enumerate(frames):
        fid = (view, t) if view is not None else None
        if t % gop.gop_size == 0:
            enc = encode_intra(frame, q, ladder, kind="intra", frame_id=fid)
            prev = decode_intra(enc, ladder).astype(np.int16)
        else:
            diff = frame.astype(np.int16) - prev
            enc = encode_intra(diff, q, ladder, kind="predicted", frame_id=fid)
            dec = decode_intra(enc, ladder, value_range=DIFF_RANGE)
            prev = np.clip(prev + dec.astype(np.int32), 0, 255).astype(np.int16)
        out.append(enc)
    return out


def decode_gop(encs: list[EncodedFrame], ladder: QuantLadder = DEFAULT_LADDER
               ) -> list[np.ndarray]:
    """Decode a time-ordered I/P stream (must start at an intra frame)."""
    out = []
    prev = None
    for e in encs:
        if e.kind == "intra":
            prev = decode_intra(e, ladder).astype(np.int16)
        elif e.kind == "predicted":
            if prev is None:
                raise CorruptStream("P frame without a decoded predecessor")
            diff = decode_intra(e, ladder, value_range=DIFF_RANGE)
            prev = np.clip(prev + diff.astype(np.int32), 0, 255).astype(np.int16)
        else:
            raise CorruptStream(f"unexpected kind {e.kind} in GOP stream")
        out.append(prev.astype(np.uint8))
    return out


# ---------------------------------------------------------------------------
# rate-distortion measurement

def lower_convex_hull(points: list[tuple[int, float]]) -> list[tuple[int, float]]:
    """Prune (rate, distortion) points to the lower convex hull: strictly
    increasing rate, strictly decreasing distortion, convex slopes."""
    pts = sorted(set((int(r), float(d)) for r, d in points))
    # drop rate-dominated points (same or higher distortion at higher rate)
    frontier = []
    best = np.inf
    for r, d in pts:
        if d < best:
            frontier.append((r, d))
            best = d
    hull: list[tuple[int, float]] = []
    for p in frontier:
        while len(hull) >= 2:
            (r1, d1), (r2, d2) = hull[-2], hull[-1]
            # keep convexity: slope r1->r2 must be steeper than r2->p
            if (d2 - d1) * (p[0] - r2) >= (p[1] - d2) * (r2 - r1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def rd_sweep(img: np.ndarray, ladder: QuantLadder = DEFAULT_LADDER,
             kind: str = "intra", value_range: tuple = (0, 255)
             ) -> list[tuple[int, float]]:
    """Measured (bits, MSE) per ladder step, pruned to the lower hull."""
    pts = []
    ref = img.astype(np.float64)
    for q in ladder.steps:
        enc = encode_intra(img, q, ladder, kind=kind)
        dec = decode_intra(enc, ladder, value_range=value_range)
        mse = float(np.mean((dec.astype(np.float64) - ref) ** 2))
        pts.append((enc.bits, mse))
    return lower_convex_hull(pts)
