"""Server store, request/response state machine, and session simulation.

The server precomputes everything once (`prepare_store`): reference color
GOP streams and block-depth streams at a fixed high-quality step, plus one
side-frame per virtual (view, time) at every ladder step together with its
measured rate-distortion curve.  Nothing in the store depends on the
request interval or delay.

Per request the server computes the achievable cone, frame popularities
and a budgeted allocation, and ships a Set-of-Frames bundle: allocated
side-frames plus every reference payload (with GOP dependency closure)
the window needs, minus what the session already shipped.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import codec
from .codec import (DEFAULT_LADDER, DEPTH_RANGE, EncodedFrame, GopStructure,
                    QuantLadder, RESIDUAL_RANGE)
from .errors import (DimensionMismatch, InvalidState, MissingFrame, OutOfCone)
from .navmodel import (AchievableSet, FrameId, NavState, TransitionModel,
                       achievable_set, popularity_paper, sample_path)
from .projection import BlockDepthMap, ProjectionStats, downsample_depth
from .rdalloc import RateAllocation, RDCurve, allocate
from .scene import (CameraParams, MultiviewSequence, ViewGrid, read_ppm,
                    write_ppm)
from .synthesis import SynthesisConfig, apply_eframe, make_eframe, noncomplex_vvs, complex_vvs

PSNR_CAP = 99.0


def psnr_from_mse(mse: float) -> float:
    if mse <= 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(255.0 ** 2 / mse))


@dataclass(frozen=True)
class SessionConfig:
    n_t: int = 8
    n_d: int = 0
    block_size: int = 8
    gop: GopStructure = field(default_factory=lambda: GopStructure(8))
    n_refs: int = 2
    ladder: QuantLadder = field(default_factory=QuantLadder)
    ref_q: int = 4

    def __post_init__(self):
        if self.n_t < 1 or self.n_d < 0:
            raise InvalidState("need n_t >= 1 and n_d >= 0")
        self.ladder.index(self.ref_q)   # ref step must sit on the ladder

    @property
    def live_capable(self) -> bool:
        return self.n_d < self.n_t


# ---------------------------------------------------------------------------
# store layout helpers

def _write_entries(path: Path, payloads: list[bytes]):
    with open(path, "wb") as f:
        for p in payloads:
            f.write(struct.pack(">I", len(p)))
            f.write(p)


def _read_entries(path: Path) -> list[bytes]:
    data = Path(path).read_bytes()
    out, off = [], 0
    while off < len(data):
        (n,) = struct.unpack_from(">I", data, off)
        off += 4
        out.append(data[off:off + n])
        off += n
    return out


# ---------------------------------------------------------------------------
# store

class Store:
    """Read view of a prepared store directory."""

    def __init__(self, root):
        self.root = Path(root)
        mpath = self.root / "manifest.json"
        if not mpath.exists():
            raise MissingFrame(f"no store manifest at {mpath}")
        self.meta = json.loads(mpath.read_text())
        m = self.meta
        self.width, self.height = m["width"], m["height"]
        self.n_frames = m["n_frames"]
        self.z_near, self.z_far = m["z_near"], m["z_far"]
        self.grid = ViewGrid(m["n_ref_views"], m["n_intermediate"])
        self.cfg = SessionConfig(
            n_t=8, n_d=0, block_size=m["block_size"],
            gop=GopStructure(m["gop_size"]), n_refs=m["n_refs"],
            ladder=QuantLadder(tuple(m["ladder"])), ref_q=m["ref_q"])
        self.cameras = [CameraParams(intrinsic=np.array(c["k"]),
                                     rotation=np.array(c["r"]),
                                     translation=np.array(c["t"]), id=i)
                        for i, c in enumerate(m["cameras"])]
        self._color_cache: dict = {}
        self._depth_cache: dict = {}
        self._target_cache: dict = {}
        # immutable store -> identical payloads decode identically, so
        # clients may share decoded planes across sessions
        self.decode_cache: dict = {}

    @property
    def n_views(self) -> int:
        return self.grid.total_views

    def ref_views(self) -> list[int]:
        step = self.grid.n_intermediate + 1
        return [r * step for r in range(self.grid.n_ref_views)]

    def _load_color_stream(self, v: int):
        if v not in self._color_cache:
            g = self.cfg.gop.gop_size
            n_gops = (self.n_frames + g - 1) // g
            payloads = []
            for gi in range(n_gops):
                payloads.extend(_read_entries(
                    self.root / "ref" / f"v{v}" / f"q{self.cfg.ref_q}"
                    / f"gop{gi}.bin"))
            self._color_cache[v] = payloads
        return self._color_cache[v]

    def color_payload(self, v: int, t: int) -> EncodedFrame:
        payload = self._load_color_stream(v)[t]
        kind = "intra" if t % self.cfg.gop.gop_size == 0 else "predicted"
        bits = self.meta["ref_color_bits"][str(v)][t]
        return EncodedFrame(payload=payload, bits=bits, kind=kind,
                            q=self.cfg.ref_q, frame_id=(v, t), channels=3,
                            width=self.width, height=self.height)

    def depth_payload(self, v: int, t: int) -> EncodedFrame:
        if v not in self._depth_cache:
            self._depth_cache[v] = _read_entries(self.root / "depth" / f"v{v}.bin")
        b = self.cfg.block_size
        return EncodedFrame(payload=self._depth_cache[v][t],
                            bits=self.meta["ref_depth_bits"][str(v)][t],
                            kind="intra", q=self.cfg.ref_q, frame_id=(v, t),
                            channels=1, width=self.width // b,
                            height=self.height // b)

    def eframe_payload(self, v: int, t: int, q: int) -> EncodedFrame:
        path = self.root / "ef" / f"v{v}" / f"t{t}" / f"q{q}.bin"
        payload = path.read_bytes()
        entry = self.meta["eframes"][f"{v},{t}"]
        bits = entry["bits"][str(q)]
        return EncodedFrame(payload=payload, bits=bits, kind="residual",
                            q=q, frame_id=(v, t), channels=3,
                            width=self.width, height=self.height)

    def eframe_rd(self, v: int, t: int) -> tuple[RDCurve, dict]:
        """RD hull of a side-frame plus a (bits, mse) -> q lookup."""
        entry = self.meta["eframes"][f"{v},{t}"]
        hull = [tuple(p) for p in entry["hull"]]
        by_point = {(int(b), float(m)): int(q) for q, b, m in entry["points"]}
        return RDCurve(frame_id=(v, t), points=tuple(hull)), by_point

    def target(self, v: int, t: int) -> np.ndarray:
        key = (v, t)
        if key not in self._target_cache:
            self._target_cache[key] = read_ppm(
                self.root / "targets" / f"v{v}" / f"t{t}.ppm")
        return self._target_cache[key]

    def ref_mse(self, v: int, t: int) -> float:
        return self.meta["ref_mse"][str(v)][t]


def refs_for_virtual(grid: ViewGrid, v: int, n_refs: int) -> list[int]:
    lo, hi = grid.bracketing_refs(v)
    if n_refs == 2:
        return [lo, hi]
    return [lo] if grid.alpha(v) <= 0.5 else [hi]


def prepare_store(seq: MultiviewSequence, grid: ViewGrid, cfg: SessionConfig,
                  out_dir) -> Store:
    """Precompute and persist everything a session needs.

    Deterministic: re-running over the same inputs reproduces every byte.
    """
    if grid.n_ref_views != seq.n_views:
        raise DimensionMismatch("grid reference count must match the sequence")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = cfg.gop.gop_size
    ladder = cfg.ladder
    step = grid.n_intermediate + 1

    cameras = [grid.camera_for(v, seq.cameras) for v in range(grid.total_views)]

    ref_color_bits: dict = {}
    ref_depth_bits: dict = {}
    ref_mse: dict = {}
    decoded_color: dict = {}
    decoded_bdm: dict = {}

    for r in range(seq.n_views):
        v = r * step
        encs = codec.encode_gop(seq.colors[r], cfg.gop, cfg.ref_q, ladder, view=v)
        recon = codec.decode_gop(encs, ladder)
        ref_color_bits[str(v)] = [e.bits for e in encs]
        ref_mse[str(v)] = [
            float(np.mean((recon[t].astype(np.float64)
                           - seq.colors[r][t].astype(np.float64)) ** 2))
            for t in range(seq.n_frames)]
        vdir = out / "ref" / f"v{v}" / f"q{cfg.ref_q}"
        vdir.mkdir(parents=True, exist_ok=True)
        for gi in range(0, seq.n_frames, g):
            _write_entries(vdir / f"gop{gi // g}.bin",
                           [e.payload for e in encs[gi:gi + g]])
        for t in range(seq.n_frames):
            decoded_color[(v, t)] = recon[t]

        depth_payloads = []
        dbits = []
        for t in range(seq.n_frames):
            bdm = downsample_depth(seq.depths[r][t], cfg.block_size)
            enc = codec.encode_intra(bdm.codes, cfg.ref_q, ladder, kind="intra")
            dec = codec.decode_intra(enc, ladder, value_range=DEPTH_RANGE)
            depth_payloads.append(enc.payload)
            dbits.append(enc.bits)
            decoded_bdm[(v, t)] = BlockDepthMap(dec, cfg.block_size,
                                                seq.z_near, seq.z_far)
        (out / "depth").mkdir(exist_ok=True)
        _write_entries(out / "depth" / f"v{v}.bin", depth_payloads)
        ref_depth_bits[str(v)] = dbits

    syn_cfg = SynthesisConfig(block_size=cfg.block_size, n_refs=cfg.n_refs)
    eframes_meta: dict = {}
    for v in range(grid.total_views):
        if grid.is_reference(v):
            continue
        lo, hi = grid.bracketing_refs(v)
        used = refs_for_virtual(grid, v, cfg.n_refs)
        rlo, rhi = lo // step, hi // step
        for t in range(seq.n_frames):
            refs = [(decoded_color[(u, t)], decoded_bdm[(u, t)], cameras[u])
                    for u in used]
            nc, _ = noncomplex_vvs(refs, cameras[v], syn_cfg)
            target = complex_vvs(
                [(seq.colors[rlo][t], seq.depths[rlo][t], cameras[lo]),
                 (seq.colors[rhi][t], seq.depths[rhi][t], cameras[hi])],
                cameras[v])
            ef = make_eframe(nc, target, (v, t), cfg.block_size, (lo, hi))

            tdir = out / "targets" / f"v{v}"
            tdir.mkdir(parents=True, exist_ok=True)
            write_ppm(tdir / f"t{t}.ppm", target)

            edir = out / "ef" / f"v{v}" / f"t{t}"
            edir.mkdir(parents=True, exist_ok=True)
            pts = []
            bits_by_q = {}
            resid = ef.residual.astype(np.float64)
            for q in ladder.steps:
                enc = codec.encode_intra(ef.residual, q, ladder, kind="residual")
                dec = codec.decode_intra(enc, ladder, value_range=RESIDUAL_RANGE)
                mse = float(np.mean((dec.astype(np.float64) - resid) ** 2))
                (edir / f"q{q}.bin").write_bytes(enc.payload)
                pts.append((q, enc.bits, mse))
                bits_by_q[str(q)] = enc.bits
            hull = codec.lower_convex_hull([(b, m) for _, b, m in pts])
            eframes_meta[f"{v},{t}"] = {"points": pts, "hull": hull,
                                        "bits": bits_by_q,
                                        "ref_pair": [lo, hi]}

    meta = {
        "width": seq.width, "height": seq.height, "n_frames": seq.n_frames,
        "fps": seq.fps, "z_near": seq.z_near, "z_far": seq.z_far,
        "n_ref_views": grid.n_ref_views, "n_intermediate": grid.n_intermediate,
        "block_size": cfg.block_size, "gop_size": g, "n_refs": cfg.n_refs,
        "ladder": list(ladder.steps), "ref_q": cfg.ref_q,
        "cameras": [{"k": c.intrinsic.tolist(), "r": c.rotation.tolist(),
                     "t": c.translation.tolist()} for c in cameras],
        "ref_color_bits": ref_color_bits, "ref_depth_bits": ref_depth_bits,
        "ref_mse": ref_mse, "eframes": eframes_meta,
    }
    (out / "manifest.json").write_text(
        json.dumps(meta, sort_keys=True, separators=(",", ":")))
    return Store(out)


# ---------------------------------------------------------------------------
# request handling

@dataclass
class Request:
    t0: int
    nav: NavState


@dataclass
class BundleItem:
    role: str              # ref_color | ref_depth | eframe
    v: int
    t: int
    enc: EncodedFrame


@dataclass
class SoFBundle:
    request_id: int
    window: tuple          # (first, last) display times, inclusive
    items: list
    allocation: RateAllocation | None
    popularity: dict       # (v, t) -> probability over the window
    eframe_q: dict         # (v, t) -> chosen ladder step
    total_bits: int = 0
    ref_color_bits: int = 0
    depth_bits: int = 0
    eframe_bits: int = 0


@dataclass
class SessionHistory:
    shipped_color: set = field(default_factory=set)
    shipped_depth: set = field(default_factory=set)
    shipped_ef: set = field(default_factory=set)
    prev_cone: AchievableSet | None = None
    n_requests: int = 0


def _uniform_choices(curves, budget: int) -> RateAllocation:
    """All side-frames at the same hull index, the finest that fits."""
    min_total = sum(c.min_bits for c in curves)
    if budget < min_total:
        from .errors import InfeasibleBudget
        raise InfeasibleBudget(
            f"budget {budget} below minimum feasible rate {min_total}")
    best_k = 0
    for k in range(max(len(c.points) for c in curves)):
        total = sum(c.points[min(k, len(c.points) - 1)][0] for c in curves)
        if total <= budget:
            best_k = k
        else:
            break
    choices = {c.frame_id: c.points[min(best_k, len(c.points) - 1)]
               for c in curves}
    return RateAllocation(choices=choices,
                          total_bits=sum(r for r, _ in choices.values()),
                          budget=budget, lam=-1.0)


def handle_request(store: Store, cfg: SessionConfig, model: TransitionModel,
                   req: Request, history: SessionHistory, budget: int,
                   include_eframes: bool = True,
                   alloc_mode: str = "weighted") -> SoFBundle:
    """Assemble the Set-of-Frames bundle for one request.

    Frames with zero popularity under the model are unreachable along any
    model-consistent path and are left out of the bundle entirely.
    """
    if req.t0 % cfg.n_t != 0:
        raise InvalidState(f"requests are anchored every {cfg.n_t} frames")
    if req.nav.current.t != req.t0:
        raise InvalidState("navigation state must be reported at request time")
    grid = store.grid
    n_views = grid.total_views
    if not 0 <= req.nav.current.v < n_views:
        raise OutOfCone("reported view outside the grid")
    if history.prev_cone is not None:
        pos = (req.nav.current.v, req.t0)
        if pos not in history.prev_cone:
            raise OutOfCone(f"client reported {pos} outside the previous cone")

    horizon = cfg.n_t + cfg.n_d
    cone = achievable_set(req.nav.current, cfg.n_t, cfg.n_d, n_views,
                          store.n_frames)
    pop = popularity_paper(model, req.nav, horizon, n_views)

    w_first = req.t0 + cfg.n_d + 1
    w_last = min(req.t0 + cfg.n_d + cfg.n_t, store.n_frames - 1)
    window_ts = [t for t in range(w_first, w_last + 1)]

    virt: list[tuple] = []
    needed_color: set = set()
    needed_depth: set = set()
    for t in window_ts:
        tau = t - req.t0
        for v in range(max(0, req.nav.current.v - tau),
                       min(n_views - 1, req.nav.current.v + tau) + 1):
            if pop.prob(v, t) == 0.0:
                continue
            if grid.is_reference(v):
                needed_color.add((v, t))
                needed_depth.add((v, t))
            else:
                virt.append((v, t))
                for u in refs_for_virtual(grid, v, cfg.n_refs):
                    needed_color.add((u, t))
                    needed_depth.add((u, t))
    if not include_eframes:
        virt = []

    popularity = {(v, t): pop.prob(v, t) for v, t in virt}
    curves = []
    point_to_q = {}
    for v, t in sorted(virt):
        curve, lut = store.eframe_rd(v, t)
        curves.append(curve)
        point_to_q[(v, t)] = lut
    if not curves:
        allocation = None
    elif alloc_mode == "uniform":
        allocation = _uniform_choices(curves, budget)
    else:
        allocation = allocate(curves, popularity, budget)

    # GOP dependency closure for reference color
    g = cfg.gop.gop_size
    closed_color: set = set()
    for v, t in needed_color:
        for tt in range((t // g) * g, t + 1):
            closed_color.add((v, tt))

    items: list[BundleItem] = []
    bits_color = bits_depth = bits_ef = 0
    for v, t in sorted(closed_color):
        if (v, t) in history.shipped_color:
            continue
        enc = store.color_payload(v, t)
        items.append(BundleItem("ref_color", v, t, enc))
        history.shipped_color.add((v, t))
        bits_color += enc.bits
    for v, t in sorted(needed_depth):
        if (v, t) in history.shipped_depth:
            continue
        enc = store.depth_payload(v, t)
        items.append(BundleItem("ref_depth", v, t, enc))
        history.shipped_depth.add((v, t))
        bits_depth += enc.bits
    eframe_q = {}
    if allocation is not None:
        for v, t in sorted(virt):
            point = allocation.choices[(v, t)]
            q = point_to_q[(v, t)][point]
            eframe_q[(v, t)] = q
            if (v, t) in history.shipped_ef:
                continue
            enc = store.eframe_payload(v, t, q)
            items.append(BundleItem("eframe", v, t, enc))
            history.shipped_ef.add((v, t))
            bits_ef += enc.bits

    history.prev_cone = cone
    history.n_requests += 1
    return SoFBundle(request_id=history.n_requests,
                     window=(w_first, w_last), items=items,
                     allocation=allocation, popularity=popularity,
                     eframe_q=eframe_q,
                     total_bits=bits_color + bits_depth + bits_ef,
                     ref_color_bits=bits_color, depth_bits=bits_depth,
                     eframe_bits=bits_ef)


# ---------------------------------------------------------------------------
# simulated client

@dataclass
class FrameRecord:
    t: int
    v: int
    psnr: float
    is_reference: bool
    bits_window: int


@dataclass
class ClientState:
    store: Store                  # evaluation data only (targets, ref MSE)
    cfg: SessionConfig
    decoded_color: dict = field(default_factory=dict)
    decoded_depth: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    eframe_mse: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    stats: ProjectionStats = field(default_factory=ProjectionStats)
    inpaint_fills: int = 0
    bits_received: int = 0
    stalls: int = 0
    decoder_mode: str = "eframe"   # eframe | block_inpaint | dense_inpaint


def _ingest(state: ClientState, bundle: SoFBundle):
    ladder = state.cfg.ladder
    cache = state.store.decode_cache

    def cached_decode(item, value_range):
        key = (item.role, item.v, item.t, item.enc.q, item.enc.kind)
        if key not in cache:
            cache[key] = codec.decode_intra(item.enc, ladder,
                                            value_range=value_range)
        return cache[key]

    for item in sorted(bundle.items, key=lambda i: (i.role, i.v, i.t)):
        if item.role == "ref_color":
            if item.enc.kind == "intra":
                state.decoded_color[(item.v, item.t)] = \
                    cached_decode(item, (0, 255))
            else:
                prev = state.decoded_color.get((item.v, item.t - 1))
                if prev is None:
                    raise MissingFrame(
                        f"P frame {(item.v, item.t)} without its predecessor")
                diff = cached_decode(item, codec.DIFF_RANGE)
                state.decoded_color[(item.v, item.t)] = np.clip(
                    prev.astype(np.int32) + diff.astype(np.int32),
                    0, 255).astype(np.uint8)
        elif item.role == "ref_depth":
            codes = cached_decode(item, DEPTH_RANGE)
            state.decoded_depth[(item.v, item.t)] = BlockDepthMap(
                codes, state.cfg.block_size, state.store.z_near,
                state.store.z_far)
        elif item.role == "eframe":
            state.residuals[(item.v, item.t)] = cached_decode(
                item, RESIDUAL_RANGE)
    state.bits_received += bundle.total_bits


def client_step(state: ClientState, bundle: SoFBundle,
                positions: dict) -> ClientState:
    """Decode one bundle and display the window along the actual path.

    The decode path never inpaints; each virtual frame costs exactly the
    block projections plus a residual addition.
    """
    from .synthesis import inpaint_with_stats

    _ingest(state, bundle)
    grid = state.store.grid
    cfg = state.cfg
    w_first, w_last = bundle.window
    for t in range(w_first, w_last + 1):
        v = positions[t]
        if grid.is_reference(v):
            if (v, t) not in state.decoded_color:
                raise MissingFrame(f"reference frame {(v, t)} not shipped")
            psnr = psnr_from_mse(state.store.ref_mse(v, t))
            state.records.append(FrameRecord(t=t, v=v, psnr=psnr,
                                             is_reference=True,
                                             bits_window=bundle.total_bits))
            continue
        used = refs_for_virtual(grid, v, cfg.n_refs)
        refs = []
        for u in used:
            if (u, t) not in state.decoded_color or (u, t) not in state.decoded_depth:
                raise MissingFrame(f"reference data {(u, t)} not shipped")
            refs.append((state.decoded_color[(u, t)],
                         state.decoded_depth[(u, t)],
                         state.store.cameras[u]))
        syn_cfg = SynthesisConfig(block_size=cfg.block_size, n_refs=cfg.n_refs)
        nc, st = noncomplex_vvs(refs, state.store.cameras[v], syn_cfg)
        state.stats += st
        if state.decoder_mode == "eframe":
            if (v, t) not in state.residuals:
                raise MissingFrame(f"side-frame {(v, t)} not shipped")
            out = apply_eframe(nc, state.residuals[(v, t)])
        else:
            filled, nfill, _ = inpaint_with_stats(nc, depth_aware=False)
            state.inpaint_fills += nfill
            out = filled
        target = state.store.target(v, t).astype(np.float64)
        mse = float(np.mean((out.astype(np.float64) - target) ** 2))
        state.records.append(FrameRecord(t=t, v=v, psnr=psnr_from_mse(mse),
                                         is_reference=False,
                                         bits_window=bundle.total_bits))
    return state


# ---------------------------------------------------------------------------
# whole-session simulation

@dataclass
class SessionReport:
    mean_psnr: float
    total_bits: int
    ref_color_bits: int
    depth_bits: int
    eframe_bits: int
    n_displayed: int
    stalls: int
    point_projections: int
    inpaint_fills: int
    path: list                    # (t, v) for every displayed frame
    records: list

    def rate_split_percent(self) -> tuple[float, float, float]:
        tot = max(1, self.total_bits)
        return (100.0 * self.ref_color_bits / tot,
                100.0 * self.depth_bits / tot,
                100.0 * self.eframe_bits / tot)


def build_positions(model: TransitionModel, n_views: int, length: int,
                    seed: int, start_view: int) -> dict:
    """Seeded view position for every frame time 0..length."""
    s0 = NavState(FrameId(v=start_view, t=0), previous_view=start_view)
    path = sample_path(model, s0, length, seed, n_views) if length >= 1 else []
    positions = {0: start_view}
    for fid in path:
        positions[fid.t] = fid.v
    return positions


def run_session(store: Store, cfg: SessionConfig, model: TransitionModel,
                length: int, seed: int, budget: int,
                start_view: int | None = None,
                decoder_mode: str = "eframe",
                alloc_mode: str = "weighted") -> SessionReport:
    """Alternate request handling and client decoding over a seeded path."""
    n_views = store.grid.total_views
    if start_view is None:
        start_view = n_views // 2
    t_end = min(store.n_frames - 1, cfg.n_d + length)
    # sample the whole timeline: windows may extend past t_end up to the
    # sequence end, and every displayed frame needs a position
    positions = build_positions(model, n_views, max(1, store.n_frames - 1),
                                seed, start_view)

    history = SessionHistory()
    state = ClientState(store=store, cfg=cfg, decoder_mode=decoder_mode)
    bundles = []
    t0 = 0
    while t0 + cfg.n_d + 1 <= t_end:
        nav = NavState(FrameId(v=positions[t0], t=t0),
                       previous_view=positions.get(t0 - 1, positions[t0]))
        bundle = handle_request(store, cfg, model, Request(t0=t0, nav=nav),
                                history, budget,
                                include_eframes=(decoder_mode == "eframe"),
                                alloc_mode=alloc_mode)
        arrival = t0 + cfg.n_d
        state.stalls += sum(1 for t in range(bundle.window[0],
                                             bundle.window[1] + 1)
                            if t <= arrival - 1)
        client_step(state, bundle, positions)
        bundles.append(bundle)
        t0 += cfg.n_t

    psnrs = [r.psnr for r in state.records]
    return SessionReport(
        mean_psnr=float(np.mean(psnrs)) if psnrs else 0.0,
        total_bits=sum(b.total_bits for b in bundles),
        ref_color_bits=sum(b.ref_color_bits for b in bundles),
        depth_bits=sum(b.depth_bits for b in bundles),
        eframe_bits=sum(b.eframe_bits for b in bundles),
        n_displayed=len(state.records), stalls=state.stalls,
        point_projections=state.stats.point_projections,
        inpaint_fills=state.inpaint_fills,
        path=[(r.t, r.v) for r in state.records],
        records=state.records)


# ---------------------------------------------------------------------------
# reference-only transmission accounting (GOP-size studies)

def reference_stream_bits(seq: MultiviewSequence, gop_size: int, ref_q: int,
                          ladder: QuantLadder = DEFAULT_LADDER) -> dict:
    """Exact per-frame color bits for every reference view at one GOP size."""
    bits = {}
    gop = GopStructure(gop_size)
    for r in range(seq.n_views):
        encs = codec.encode_gop(seq.colors[r], gop, ref_q, ladder)
        for t, e in enumerate(encs):
            bits[(r, t)] = e.bits
    return bits


def simulate_reference_bits(bits_map: dict, grid: ViewGrid,
                            model: TransitionModel, n_t: int, n_d: int,
                            gop_size: int, n_frames: int, seed: int,
                            start_view: int | None = None,
                            n_refs: int = 2) -> int:
    """Reference color bits shipped over one seeded session (dedup within)."""
    n_views = grid.total_views
    if start_view is None:
        start_view = n_views // 2
    t_end = n_frames - 1
    positions = build_positions(model, n_views, max(1, t_end), seed, start_view)
    step = grid.n_intermediate + 1

    shipped: set = set()
    total = 0
    t0 = 0
    while t0 + n_d + 1 <= t_end:
        w_last = min(t0 + n_d + n_t, t_end)
        needed: set = set()
        for t in range(t0 + n_d + 1, w_last + 1):
            tau = t - t0
            v0 = positions[t0]
            for v in range(max(0, v0 - tau), min(n_views - 1, v0 + tau) + 1):
                if grid.is_reference(v):
                    needed.add((v // step, t))
                else:
                    for u in refs_for_virtual(grid, v, n_refs):
                        needed.add((u // step, t))
        for r, t in needed:
            for tt in range((t // gop_size) * gop_size, t + 1):
                if (r, tt) not in shipped:
                    shipped.add((r, tt))
                    total += bits_map[(r, tt)]
        t0 += n_t
    return total
