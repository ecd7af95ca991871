"""Length-prefixed JSON wire protocol for the live session service.

Every message is a 4-byte big-endian payload length followed by UTF-8
JSON.  Message types: HELLO (config echo), REQUEST, BUNDLE, FRAME_ACK,
ERROR.  Binary codec payloads travel base64-encoded inside BUNDLE frames.
"""

from __future__ import annotations

import base64
import json
import struct

from .codec import EncodedFrame
from .errors import CorruptStream

MAX_MESSAGE = 1 << 28


def pack_message(msg: dict) -> bytes:
    payload = json.dumps(msg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(payload)) + payload


def read_message(stream) -> dict | None:
    """Read one message from a file-like stream; None on clean EOF."""
    header = stream.read(4)
    if not header:
        return None
    if len(header) < 4:
        raise CorruptStream("truncated message header")
    (n,) = struct.unpack(">I", header)
    if n > MAX_MESSAGE:
        raise CorruptStream(f"message length {n} exceeds limit")
    payload = b""
    while len(payload) < n:
        chunk = stream.read(n - len(payload))
        if not chunk:
            raise CorruptStream("truncated message payload")
        payload += chunk
    try:
        msg = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptStream(f"bad message encoding: {e}") from e
    if not isinstance(msg, dict) or "type" not in msg:
        raise CorruptStream("message must be an object with a type field")
    return msg


def hello(config: dict) -> dict:
    return {"type": "HELLO", "config": config}


def request(t0: int, v: int, prev_v: int) -> dict:
    return {"type": "REQUEST", "t0": t0, "v": v, "prev_v": prev_v}


def frame_ack(t: int, v: int, psnr: float) -> dict:
    return {"type": "FRAME_ACK", "t": t, "v": v, "psnr": psnr}


def error(code: str, detail: str) -> dict:
    return {"type": "ERROR", "code": code, "detail": detail}


def encode_frame_entry(role: str, enc: EncodedFrame) -> dict:
    v, t = enc.frame_id
    return {"role": role, "v": v, "t": t, "q": enc.q, "kind": enc.kind,
            "bits": enc.bits, "channels": enc.channels,
            "width": enc.width, "height": enc.height,
            "data": base64.b64encode(enc.payload).decode("ascii")}


def decode_frame_entry(entry: dict) -> tuple[str, EncodedFrame]:
    enc = EncodedFrame(payload=base64.b64decode(entry["data"]),
                       bits=entry["bits"], kind=entry["kind"], q=entry["q"],
                       frame_id=(entry["v"], entry["t"]),
                       channels=entry["channels"], width=entry["width"],
                       height=entry["height"])
    return entry["role"], enc


def bundle_message(bundle) -> dict:
    """Serialize a session.SoFBundle."""
    alloc = None
    if bundle.allocation is not None:
        alloc = [{"v": v, "t": t, "bits": r, "mse": d,
                  "q": bundle.eframe_q[(v, t)],
                  "pop": bundle.popularity[(v, t)]}
                 for (v, t), (r, d) in sorted(bundle.allocation.choices.items())]
    return {"type": "BUNDLE", "request_id": bundle.request_id,
            "window": list(bundle.window),
            "frames": [encode_frame_entry(i.role, i.enc) for i in bundle.items],
            "allocation": alloc,
            "total_bits": bundle.total_bits,
            "ref_color_bits": bundle.ref_color_bits,
            "depth_bits": bundle.depth_bits,
            "eframe_bits": bundle.eframe_bits}


def bundle_from_message(msg: dict):
    """Deserialize a BUNDLE message into a session.SoFBundle."""
    from .session import BundleItem, SoFBundle

    items = []
    for entry in msg["frames"]:
        role, enc = decode_frame_entry(entry)
        items.append(BundleItem(role=role, v=entry["v"], t=entry["t"], enc=enc))
    eframe_q = {}
    popularity = {}
    if msg["allocation"]:
        for row in msg["allocation"]:
            eframe_q[(row["v"], row["t"])] = row["q"]
            popularity[(row["v"], row["t"])] = row["pop"]
    return SoFBundle(request_id=msg["request_id"],
                     window=tuple(msg["window"]), items=items,
                     allocation=None, popularity=popularity,
                     eframe_q=eframe_q, total_bits=msg["total_bits"],
                     ref_color_bits=msg["ref_color_bits"],
                     depth_bits=msg["depth_bits"],
                     eframe_bits=msg["eframe_bits"])
