"""Experiment command line: store preparation, parameter sweeps, and the
live service.  Every command is deterministic under a fixed seed and emits
tab-separated tables plus a JSON config manifest so runs are diffable."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import serve as serve_mod
from .codec import DEFAULT_LADDER, GopStructure, QuantLadder
from .errors import MvnavError
from .navmodel import TransitionModel
from .projection import BLOCK_SIZES, downsample_depth
from .rdalloc import bjontegaard_rate, select_gop_size
from .scene import (SceneSpec, ViewGrid, default_scene_spec,
                    generate_synthetic_scene, load_sequence)
from .session import (SessionConfig, Store, prepare_store, run_session)
from .synthesis import SynthesisConfig, complex_vvs, make_eframe, noncomplex_vvs


def _parse_model(text: str) -> TransitionModel:
    p1, p2, p3 = (float(x) for x in text.split(","))
    return TransitionModel(p1=p1, p2=p2, p3=p3)


def _parse_ints(text: str) -> list:
    return [int(x) for x in text.split(",")]


def _build_sequence(args):
    if getattr(args, "input", None):
        return load_sequence(args.input)
    spec = default_scene_spec(width=args.width, height=args.height,
                              n_views=args.views, n_frames=args.frames,
                              seed=args.scene_seed)
    return generate_synthetic_scene(spec, seed=args.scene_seed)


def _add_scene_args(p):
    p.add_argument("--input", help="dataset manifest (JSON); default: synthetic")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--views", type=int, default=3,
                   help="number of reference views")
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--scene-seed", type=int, default=0)


def _write_table(args, name: str, header: list, rows: list, config: dict):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(str(c) for c in row))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.tsv").write_text(text)
        clean = {k: v for k, v in config.items() if k != "func"}
        (out / f"{name}.config.json").write_text(
            json.dumps(clean, sort_keys=True, indent=2, default=str) + "\n")


def _session_cfg(args, store: Store, n_t=None, n_d=None) -> SessionConfig:
    return SessionConfig(
        n_t=args.nt if n_t is None else n_t,
        n_d=args.nd if n_d is None else n_d,
        block_size=store.cfg.block_size, gop=store.cfg.gop,
        n_refs=store.cfg.n_refs, ladder=store.cfg.ladder,
        ref_q=store.cfg.ref_q)


def _mean_sessions(store, cfg, model, args, budget, decoder_mode="eframe",
                   alloc_mode="weighted"):
    """(mean PSNR, mean total bits, mean splits) over seeded paths."""
    psnrs, totals, refs, depths, efs = [], [], [], [], []
    for i in range(args.paths):
        rep = run_session(store, cfg, model, length=args.length,
                          seed=args.seed * 100003 + i, budget=budget,
                          decoder_mode=decoder_mode, alloc_mode=alloc_mode)
        psnrs.append(rep.mean_psnr)
        totals.append(rep.total_bits)
        refs.append(rep.ref_color_bits)
        depths.append(rep.depth_bits)
        efs.append(rep.eframe_bits)
    return (float(np.mean(psnrs)), float(np.mean(totals)),
            float(np.mean(refs)), float(np.mean(depths)), float(np.mean(efs)))


# ---------------------------------------------------------------------------
# commands

def cmd_prepare(args) -> int:
    seq = _build_sequence(args)
    grid = ViewGrid(seq.n_views, args.intermediates)
    cfg = SessionConfig(block_size=args.block_size,
                        gop=GopStructure(args.gop), n_refs=args.n_refs,
                        ladder=QuantLadder(tuple(_parse_ints(args.ladder))),
                        ref_q=args.ref_q)
    prepare_store(seq, grid, cfg, args.out)
    print(f"store prepared at {args.out}")
    return 0


def cmd_sweep(args) -> int:
    store = Store(args.store)
    model = _parse_model(args.model)
    rows = []
    for n_t in _parse_ints(args.nt):
        for n_d in _parse_ints(args.nd):
            cfg = _session_cfg(args, store, n_t=n_t, n_d=n_d)
            for budget in _parse_ints(args.budgets):
                psnr, total, rc, dp, ef = _mean_sessions(
                    store, cfg, model, args, budget)
                rows.append((n_t, n_d, budget, f"{psnr:.6f}",
                             f"{total / 1000.0:.3f}", f"{rc:.1f}",
                             f"{dp:.1f}", f"{ef:.1f}"))
    _write_table(args, "sweep",
                 ["n_t", "n_d", "budget_bits", "mean_psnr_db", "total_kbit",
                  "ref_color_bits", "depth_bits", "eframe_bits"],
                 rows, vars(args))
    return 0


def cmd_gop(args) -> int:
    seq = _build_sequence(args)
    grid = ViewGrid(seq.n_views, args.intermediates)
    model = _parse_model(args.model)
    blind = TransitionModel(p1=1 / 3, p2=1 / 3, p3=1 / 3)
    candidates = _parse_ints(args.candidates)

    best_aware, table_aware = select_gop_size(
        seq, grid, model, n_t=args.nt, candidates=candidates,
        n_paths=args.paths, seed=args.seed, ref_q=args.ref_q, n_d=args.nd)
    best_blind, _ = select_gop_size(
        seq, grid, blind, n_t=args.nt, candidates=candidates,
        n_paths=args.paths, seed=args.seed, ref_q=args.ref_q, n_d=args.nd)
    # both choices priced under the true behavior model
    aware_rate = table_aware[best_aware]
    blind_rate = table_aware[best_blind]
    penalty = 100.0 * (blind_rate - aware_rate) / aware_rate if aware_rate else 0.0

    rows = [(g, f"{table_aware[g] / 1000.0:.3f}",
             "aware" if g == best_aware else
             ("blind" if g == best_blind else ""))
            for g in sorted(table_aware)]
    rows.append(("penalty_percent", f"{penalty:.4f}", ""))
    _write_table(args, "gop", ["gop_size", "mean_ref_kbit", "chosen_by"],
                 rows, vars(args))
    return 0


def cmd_alloc_compare(args) -> int:
    store = Store(args.store)
    cfg = _session_cfg(args, store)
    budgets = _parse_ints(args.budgets)
    rows = []
    for scenario in args.scenarios.split(";"):
        model = _parse_model(scenario)
        curve_w, curve_u = [], []
        for budget in budgets:
            pw, tw, *_ = _mean_sessions(store, cfg, model, args, budget,
                                        alloc_mode="weighted")
            pu, tu, *_ = _mean_sessions(store, cfg, model, args, budget,
                                        alloc_mode="uniform")
            curve_w.append((tw, pw))
            curve_u.append((tu, pu))
            rows.append((scenario, budget, f"{pw:.6f}", f"{tw / 1000.0:.3f}",
                         f"{pu:.6f}", f"{tu / 1000.0:.3f}", ""))
        bd = bjontegaard_rate(curve_u, curve_w)
        rows.append((scenario, "bd_rate_percent", "", "", "", "", f"{bd:.4f}"))
    _write_table(args, "alloc_compare",
                 ["model", "budget_bits", "weighted_psnr", "weighted_kbit",
                  "uniform_psnr", "uniform_kbit", "bd_rate"],
                 rows, vars(args))
    return 0


def cmd_baselines(args) -> int:
    store = Store(args.store)
    cfg = _session_cfg(args, store)
    model = _parse_model(args.model)
    rows = []
    for budget in _parse_ints(args.budgets):
        psnr, total, *_ = _mean_sessions(store, cfg, model, args, budget)
        rows.append(("proposed", budget, f"{psnr:.6f}",
                     f"{total / 1000.0:.3f}"))
    psnr, total, *_ = _mean_sessions(store, cfg, model, args, 0,
                                     decoder_mode="block_inpaint")
    rows.append(("block_inpaint", 0, f"{psnr:.6f}", f"{total / 1000.0:.3f}"))
    if args.dense_store:
        dense = Store(args.dense_store)
        dcfg = _session_cfg(args, dense)
        psnr, total, *_ = _mean_sessions(dense, dcfg, model, args, 0,
                                         decoder_mode="dense_inpaint")
        rows.append(("dense_inpaint", 0, f"{psnr:.6f}",
                     f"{total / 1000.0:.3f}"))
    _write_table(args, "baselines",
                 ["decoder", "budget_bits", "mean_psnr_db", "total_kbit"],
                 rows, vars(args))
    return 0


def cmd_complexity(args) -> int:
    seq = _build_sequence(args)
    grid = ViewGrid(seq.n_views, args.intermediates)
    virt = next(v for v in range(grid.total_views) if not grid.is_reference(v))
    lo, hi = grid.bracketing_refs(virt)
    step = grid.n_intermediate + 1
    cam = grid.camera_for(virt, seq.cameras)
    rows = []
    for b in BLOCK_SIZES:
        syn = SynthesisConfig(block_size=b, n_refs=2)
        variances, points = [], 0
        for t in range(seq.n_frames):
            refs = [(seq.colors[u // step][t],
                     downsample_depth(seq.depths[u // step][t], b),
                     seq.cameras[u // step]) for u in (lo, hi)]
            nc, st = noncomplex_vvs(refs, cam, syn)
            target = complex_vvs(
                [(seq.colors[lo // step][t], seq.depths[lo // step][t],
                  seq.cameras[lo // step]),
                 (seq.colors[hi // step][t], seq.depths[hi // step][t],
                  seq.cameras[hi // step])], cam)
            ef = make_eframe(nc, target, (virt, t), b, (lo, hi))
            variances.append(float(np.var(ef.residual.astype(np.float64))))
            points += st.point_projections
        ratio = points / (2 * seq.n_frames * seq.width * seq.height)
        rows.append((b, f"{ratio:.8f}", f"{float(np.mean(variances)):.4f}"))
    _write_table(args, "complexity",
                 ["block_size", "point_projection_ratio", "residual_variance"],
                 rows, vars(args))
    return 0


def cmd_serve(args) -> int:
    try:
        store = Store(args.store)
    except MvnavError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    host, port = args.listen.rsplit(":", 1)
    cfg = _session_cfg(args, store)
    server = serve_mod.SessionServer((host, int(port)), store, cfg,
                                     _parse_model(args.model), args.budget)
    print(f"serving {args.store} on {server.server_address[0]}:"
          f"{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_session_args(p, budgets=True, nt_nd_lists=False):
    if nt_nd_lists:
        p.add_argument("--nt", default="2,4,8", help="comma-separated sweep")
        p.add_argument("--nd", default="0", help="comma-separated sweep")
    else:
        p.add_argument("--nt", type=int, default=4)
        p.add_argument("--nd", type=int, default=0)
    p.add_argument("--paths", type=int, default=8)
    p.add_argument("--length", type=int, default=31)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--model", default="0.6,0.3,0.3")
    if budgets:
        p.add_argument("--budgets", default="20000,40000,80000,160000")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mvnav",
        description="interactive multiview navigation experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="precompute and write a server store")
    _add_scene_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--gop", type=int, default=8)
    p.add_argument("--ladder", default=",".join(str(q) for q in DEFAULT_LADDER.steps))
    p.add_argument("--ref-q", type=int, default=4)
    p.add_argument("--intermediates", type=int, default=2)
    p.add_argument("--n-refs", type=int, default=2)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("sweep", help="RD sweep over request interval and delay")
    p.add_argument("--store", required=True)
    _add_session_args(p, nt_nd_lists=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gop", help="GOP-size selection with/without the model")
    _add_scene_args(p)
    _add_session_args(p, budgets=False)
    p.add_argument("--intermediates", type=int, default=2)
    p.add_argument("--candidates", default="1,2,4,8,16")
    p.add_argument("--ref-q", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gop)

    p = sub.add_parser("alloc-compare",
                       help="popularity-weighted versus uniform allocation")
    p.add_argument("--store", required=True)
    _add_session_args(p)
    p.add_argument("--scenarios",
                   default="0.9,0.1,0.9;0.3,0.3,0.3;0.1,0.9,0.1;0.1,0.1,0.1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_alloc_compare)

    p = sub.add_parser("baselines", help="side-frame decoder versus inpainting")
    p.add_argument("--store", required=True)
    p.add_argument("--dense-store", help="b=1 store for the dense baseline")
    _add_session_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("complexity",
                       help="projection counts and residual variance per block size")
    _add_scene_args(p)
    p.add_argument("--intermediates", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--store", required=True)
    p.add_argument("--listen", default="127.0.0.1:9447")
    p.add_argument("--nt", type=int, default=4)
    p.add_argument("--nd", type=int, default=0)
    p.add_argument("--budget", type=int, default=80000)
    p.add_argument("--model", default="0.6,0.3,0.3")
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MvnavError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
