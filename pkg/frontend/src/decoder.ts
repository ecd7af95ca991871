/** Client-side bundle decoder: reference color (I/P), block depth and
 * residual side-frames, plus the non-complex display path — block
 * projection of the two bracketing references, inverse-distance fusion,
 * residual addition. No inpainting anywhere. */

import { base64ToBytes, decodePayload } from "./codec.js";
import {
  cameraCenter,
  fuseProjections,
  projectView,
} from "./projection.js";
import type { BundleMessage, FrameEntry, SessionConfigEcho } from "./types.js";

const ROLE_RANGE: Record<string, [number, number]> = {
  ref_depth: [0, 65535],
  eframe: [-255, 255],
};

function key(v: number, t: number): string {
  return `${v},${t}`;
}

export class BundleDecoder {
  /** decoded reference frames, H*W*3 */
  private color = new Map<string, Uint8Array>();
  /** block-resolution depth codes, (H/b)*(W/b) */
  private depth = new Map<string, Int32Array>();
  /** residual planes per channel */
  private residual = new Map<string, Int32Array[]>();

  constructor(private readonly cfg: SessionConfigEcho) {}

  isReference(v: number): boolean {
    return v % (this.cfg.n_intermediate + 1) === 0;
  }

  bracketingRefs(v: number): [number, number] {
    const step = this.cfg.n_intermediate + 1;
    const left = Math.floor(v / step) * step;
    return [left, left + step];
  }

  ingest(bundle: BundleMessage): void {
    const items = [...bundle.frames].sort((a, b) =>
      a.role !== b.role
        ? a.role < b.role
          ? -1
          : 1
        : a.v !== b.v
          ? a.v - b.v
          : a.t - b.t,
    );
    for (const item of items) {
      this.ingestEntry(item);
    }
  }

  private ingestEntry(item: FrameEntry): void {
    const payload = base64ToBytes(item.data);
    if (item.role === "ref_color") {
      if (item.kind === "intra") {
        const dec = decodePayload(
          payload, 3, item.width, item.height, 0, 255, this.cfg.ladder);
        this.color.set(key(item.v, item.t), interleave(dec.planes, 3));
      } else {
        const prev = this.color.get(key(item.v, item.t - 1));
        if (prev === undefined) {
          throw new Error(`P frame ${item.v},${item.t} without predecessor`);
        }
        const dec = decodePayload(
          payload, 3, item.width, item.height, -255, 255, this.cfg.ladder);
        const diff = interleaveSigned(dec.planes, 3);
        const out = new Uint8Array(prev.length);
        for (let i = 0; i < prev.length; i++) {
          let v = prev[i] + diff[i];
          if (v < 0) v = 0;
          if (v > 255) v = 255;
          out[i] = v;
        }
        this.color.set(key(item.v, item.t), out);
      }
    } else if (item.role === "ref_depth") {
      const [lo, hi] = ROLE_RANGE.ref_depth;
      const dec = decodePayload(
        payload, 1, item.width, item.height, lo, hi, this.cfg.ladder);
      this.depth.set(key(item.v, item.t), dec.planes[0]);
    } else {
      const [lo, hi] = ROLE_RANGE.eframe;
      const dec = decodePayload(
        payload, 3, item.width, item.height, lo, hi, this.cfg.ladder);
      this.residual.set(key(item.v, item.t), dec.planes);
    }
  }

  hasFrame(v: number, t: number): boolean {
    if (this.isReference(v)) {
      return this.color.has(key(v, t));
    }
    const [l, r] = this.bracketingRefs(v);
    return (
      this.color.has(key(l, t)) &&
      this.color.has(key(r, t)) &&
      this.depth.has(key(l, t)) &&
      this.depth.has(key(r, t)) &&
      this.residual.has(key(v, t))
    );
  }

  /** Decoded display output for frame (v, t), H*W*3 RGB. */
  displayFrame(v: number, t: number): Uint8Array {
    const cfg = this.cfg;
    if (this.isReference(v)) {
      const img = this.color.get(key(v, t));
      if (img === undefined) {
        throw new Error(`reference frame ${v},${t} not shipped`);
      }
      return img;
    }
    const [l, r] = this.bracketingRefs(v);
    const proj = [l, r].map((u) => {
      const col = this.color.get(key(u, t));
      const dep = this.depth.get(key(u, t));
      if (col === undefined || dep === undefined) {
        throw new Error(`reference data ${u},${t} not shipped`);
      }
      return projectView(
        col, dep, cfg.cameras[u], cfg.cameras[v],
        cfg.width, cfg.height, cfg.block_size, cfg.z_near, cfg.z_far);
    });
    const ct = cameraCenter(cfg.cameras[v]);
    const [dl, dr] = [l, r].map((u) => {
      const cu = cameraCenter(cfg.cameras[u]);
      return Math.sqrt(
        (ct[0] - cu[0]) ** 2 + (ct[1] - cu[1]) ** 2 + (ct[2] - cu[2]) ** 2);
    });
    const fused = fuseProjections(
      proj[0], proj[1], dl, dr, cfg.width, cfg.height);
    const res = this.residual.get(key(v, t));
    if (res === undefined) {
      throw new Error(`side-frame ${v},${t} not shipped`);
    }
    const n = cfg.width * cfg.height;
    const out = new Uint8Array(n * 3);
    for (let i = 0; i < n; i++) {
      const hole = fused.holes[i];
      for (let c = 0; c < 3; c++) {
        const base = hole ? 0 : fused.rgb[i * 3 + c];
        let val = base + res[c][i];
        if (val < 0) val = 0;
        if (val > 255) val = 255;
        out[i * 3 + c] = val;
      }
    }
    return out;
  }
}

function interleave(planes: Int32Array[], channels: number): Uint8Array {
  const n = planes[0].length;
  const out = new Uint8Array(n * channels);
  for (let c = 0; c < channels; c++) {
    for (let i = 0; i < n; i++) {
      out[i * channels + c] = planes[c][i];
    }
  }
  return out;
}

function interleaveSigned(planes: Int32Array[], channels: number): Int32Array {
  const n = planes[0].length;
  const out = new Int32Array(n * channels);
  for (let c = 0; c < channels; c++) {
    for (let i = 0; i < n; i++) {
      out[i * channels + c] = planes[c][i];
    }
  }
  return out;
}
