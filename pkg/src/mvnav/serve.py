"""TCP session service speaking the length-prefixed JSON protocol.

One connection is one session: per-connection history, sequential message
handling; distinct connections are independent and may interleave freely.
`replay_session` is the scripted client used by tests: it drives requests
along a seeded model path and must reproduce `run_session` bit totals
exactly.
"""

from __future__ import annotations

import socket
import socketserver
import threading

from . import protocol
from .errors import MvnavError, OutOfCone
from .navmodel import FrameId, NavState, TransitionModel
from .session import (Request, SessionConfig, SessionHistory, Store,
                      build_positions, handle_request)


class SessionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, store: Store, cfg: SessionConfig,
                 model: TransitionModel, budget: int):
        self.store = store
        self.cfg = cfg
        self.model = model
        self.budget = budget
        super().__init__(address, _Handler)

    def config_echo(self) -> dict:
        m = self.store.meta
        return {
            "width": m["width"], "height": m["height"],
            "n_frames": m["n_frames"], "fps": m["fps"],
            "z_near": m["z_near"], "z_far": m["z_far"],
            "n_ref_views": m["n_ref_views"],
            "n_intermediate": m["n_intermediate"],
            "n_views": self.store.grid.total_views,
            "block_size": m["block_size"], "gop_size": m["gop_size"],
            "n_refs": m["n_refs"], "ladder": m["ladder"],
            "ref_q": m["ref_q"], "cameras": m["cameras"],
            "n_t": self.cfg.n_t, "n_d": self.cfg.n_d,
            "budget": self.budget,
            "model": {"p1": self.model.p1, "p2": self.model.p2,
                      "p3": self.model.p3},
        }


class _Handler(socketserver.StreamRequestHandler):

    def handle(self):
        server: SessionServer = self.server
        history = SessionHistory()
        while True:
            try:
                msg = protocol.read_message(self.rfile)
            except MvnavError as e:
                self._send(protocol.error("CorruptStream", str(e)))
                return
            if msg is None:
                return
            kind = msg.get("type")
            if kind == "HELLO":
                self._send(protocol.hello(server.config_echo()))
            elif kind == "REQUEST":
                try:
                    nav = NavState(FrameId(v=int(msg["v"]), t=int(msg["t0"])),
                                   previous_view=int(msg["prev_v"]))
                    bundle = handle_request(
                        server.store, server.cfg, server.model,
                        Request(t0=int(msg["t0"]), nav=nav), history,
                        server.budget)
                except OutOfCone as e:
                    self._send(protocol.error("OutOfCone", str(e)))
                except MvnavError as e:
                    self._send(protocol.error(type(e).__name__, str(e)))
                except (KeyError, ValueError) as e:
                    self._send(protocol.error("BadRequest", str(e)))
                else:
                    self._send(protocol.bundle_message(bundle))
            elif kind == "FRAME_ACK":
                pass    # metrics sink; nothing to answer
            else:
                self._send(protocol.error("BadRequest",
                                          f"unknown message type {kind!r}"))

    def _send(self, msg: dict):
        self.wfile.write(protocol.pack_message(msg))
        self.wfile.flush()


def start_server(store: Store, cfg: SessionConfig, model: TransitionModel,
                 budget: int, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, (host, port))."""
    server = SessionServer((host, port), store, cfg, model, budget)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, server.server_address


def replay_session(host: str, port: int, seed: int, length: int,
                   start_view: int | None = None) -> dict:
    """Scripted client: HELLO, then seeded model-driven requests.

    Samples the same navigation path as `run_session` from the HELLO echo
    and returns the summed bundle accounting.
    """
    with socket.create_connection((host, port)) as sock:
        rfile = sock.makefile("rb")

        def send(msg):
            sock.sendall(protocol.pack_message(msg))

        send(protocol.hello({}))
        echo = protocol.read_message(rfile)["config"]
        model = TransitionModel(**echo["model"])
        n_views = echo["n_views"]
        n_t, n_d = echo["n_t"], echo["n_d"]
        if start_view is None:
            start_view = n_views // 2
        t_end = min(echo["n_frames"] - 1, n_d + length)
        positions = build_positions(model, n_views,
                                    max(1, echo["n_frames"] - 1), seed,
                                    start_view)

        totals = {"total_bits": 0, "ref_color_bits": 0, "depth_bits": 0,
                  "eframe_bits": 0, "bundles": 0}
        t0 = 0
        while t0 + n_d + 1 <= t_end:
            send(protocol.request(t0, positions[t0],
                                  positions.get(t0 - 1, positions[t0])))
            reply = protocol.read_message(rfile)
            if reply["type"] == "ERROR":
                raise OutOfCone(f"server error: {reply}")
            for key in ("total_bits", "ref_color_bits", "depth_bits",
                        "eframe_bits"):
                totals[key] += reply[key]
            totals["bundles"] += 1
            t0 += n_t
        return totals
