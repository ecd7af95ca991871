#!/usr/bin/env python3
"""Generate the cross-implementation golden corpus for the viewer tests.

Writes frontend/tests/golden/{config,session}.json: the server config echo,
the raw BUNDLE wire messages of a seeded session, and the displayed frames'
decoded RGB bytes from this package's reference decoder.  The viewer test
decodes the same messages and must match byte for byte.
"""

import base64
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mvnav import protocol
from mvnav.codec import GopStructure, QuantLadder
from mvnav.navmodel import FrameId, NavState, TransitionModel
from mvnav.scene import ViewGrid, default_scene_spec, generate_synthetic_scene
from mvnav.serve import start_server
from mvnav.session import (ClientState, Request, SessionConfig,
                           SessionHistory, _ingest, apply_eframe,
                           build_positions, handle_request, prepare_store,
                           refs_for_virtual)
from mvnav.synthesis import SynthesisConfig, noncomplex_vvs

SEED = 5
BUDGET = 60000
LENGTH = 7


def displayed_frame(state, grid, cfg, v, t):
    if grid.is_reference(v):
        return state.decoded_color[(v, t)]
    refs = [(state.decoded_color[(u, t)], state.decoded_depth[(u, t)],
             state.store.cameras[u])
            for u in refs_for_virtual(grid, v, cfg.n_refs)]
    nc, _ = noncomplex_vvs(refs, state.store.cameras[v],
                           SynthesisConfig(block_size=cfg.block_size,
                                           n_refs=cfg.n_refs))
    return apply_eframe(nc, state.residuals[(v, t)])


def main():
    out_dir = Path(__file__).resolve().parents[1] / "frontend/tests/golden"
    out_dir.mkdir(parents=True, exist_ok=True)

    spec = default_scene_spec(width=64, height=64, n_views=2, n_frames=8,
                              seed=0)
    seq = generate_synthetic_scene(spec, seed=0)
    grid = ViewGrid(2, 1)
    cfg = SessionConfig(n_t=4, n_d=0, block_size=8, gop=GopStructure(4),
                        ladder=QuantLadder((4, 8, 16, 32, 64)), ref_q=4)
    model = TransitionModel(0.6, 0.3, 0.3)
    with tempfile.TemporaryDirectory() as tmp:
        store = prepare_store(seq, grid, cfg, Path(tmp) / "store")
        server, _ = start_server(store, cfg, model, BUDGET)
        config = server.config_echo()
        server.shutdown()
        server.server_close()

        n_views = grid.total_views
        positions = build_positions(model, n_views, store.n_frames - 1,
                                    SEED, n_views // 2)
        history = SessionHistory()
        state = ClientState(store=store, cfg=cfg)
        requests, bundles, frames = [], [], []
        t0 = 0
        while t0 + cfg.n_d + 1 <= min(store.n_frames - 1, cfg.n_d + LENGTH):
            nav = NavState(FrameId(v=positions[t0], t=t0),
                           previous_view=positions.get(t0 - 1, positions[t0]))
            req = Request(t0=t0, nav=nav)
            bundle = handle_request(store, cfg, model, req, history, BUDGET)
            requests.append({"t0": t0, "v": nav.current.v,
                             "prev_v": nav.previous_view})
            bundles.append(protocol.bundle_message(bundle))
            _ingest(state, bundle)
            for t in range(bundle.window[0], bundle.window[1] + 1):
                v = positions[t]
                rgb = displayed_frame(state, grid, cfg, v, t)
                frames.append({
                    "t": t, "v": v,
                    "rgb_b64": base64.b64encode(rgb.tobytes()).decode()})
            t0 += cfg.n_t

    (out_dir / "config.json").write_text(
        json.dumps(config, sort_keys=True, indent=1))
    (out_dir / "session.json").write_text(json.dumps(
        {"seed": SEED, "budget": BUDGET,
         "positions": {str(k): v for k, v in sorted(positions.items())},
         "requests": requests, "bundles": bundles,
         "expected_frames": frames},
        sort_keys=True))
    print(f"wrote {out_dir}/config.json and session.json "
          f"({len(bundles)} bundles, {len(frames)} frames)")


if __name__ == "__main__":
    main()
