/** Bit-exact decoder for the server's intra payload format.
 *
 * Header: kind (2 bits), ladder index (6), paddedWidth/16 (8),
 * paddedHeight/16 (8). Per channel, 8x8 blocks in raster order as
 * (run, level) exp-Golomb pairs in zigzag order, EOB = run 63.
 *
 * The inverse DCT accumulates D[j][i] * c[j][k] * D[k][l] over (j, k) in
 * row-major order — the same summation order as the server — so decoded
 * planes match byte for byte. */

import { BitReader } from "./bits.js";
import { DCT, unzigzagOrder } from "./dct.js";

const UNZZ = unzigzagOrder();
const EOB_RUN = 63;

export const KIND_NAMES: Record<number, string> = {
  0: "intra",
  1: "predicted",
  2: "residual",
};

export interface DecodedPlanes {
  kind: string;
  q: number;
  /** one Int32Array of length width*height per channel, clamped */
  planes: Int32Array[];
  width: number;
  height: number;
}

export function decodePayload(
  payload: Uint8Array,
  channels: number,
  width: number,
  height: number,
  lo: number,
  hi: number,
  ladder: number[],
): DecodedPlanes {
  const r = new BitReader(payload);
  const kindCode = r.fixed(2);
  const qIndex = r.fixed(6);
  const pw = r.fixed(8) * 16;
  const ph = r.fixed(8) * 16;
  const kind = KIND_NAMES[kindCode];
  if (kind === undefined || pw === 0 || ph === 0) {
    throw new Error("bad frame header");
  }
  if (qIndex >= ladder.length) {
    throw new Error("q index beyond ladder");
  }
  const q = ladder[qIndex];

  const planes: Int32Array[] = [];
  const levels = new Array<number>(64);
  const coefs = new Array<number>(64);
  for (let c = 0; c < channels; c++) {
    const padded = new Int32Array(pw * ph);
    for (let by = 0; by < ph / 8; by++) {
      for (let bx = 0; bx < pw / 8; bx++) {
        levels.fill(0);
        let pos = -1;
        for (;;) {
          const run = r.ue();
          if (run === EOB_RUN) {
            break;
          }
          pos += run + 1;
          if (pos > 63) {
            throw new Error("block overrun");
          }
          const level = r.se();
          if (level === 0) {
            throw new Error("zero level in run-length pair");
          }
          levels[pos] = level;
        }
        for (let m = 0; m < 64; m++) {
          coefs[m] = levels[UNZZ[m]] * q;
        }
        for (let i = 0; i < 8; i++) {
          for (let l = 0; l < 8; l++) {
            let s = 0.0;
            for (let j = 0; j < 8; j++) {
              for (let k = 0; k < 8; k++) {
                s += DCT[j][i] * coefs[j * 8 + k] * DCT[k][l];
              }
            }
            let v = Math.floor(s + 0.5);
            if (v < lo) v = lo;
            if (v > hi) v = hi;
            padded[(by * 8 + i) * pw + (bx * 8 + l)] = v;
          }
        }
      }
    }
    // crop the 16-padding back to the true plane size
    const plane = new Int32Array(width * height);
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        plane[y * width + x] = padded[y * pw + x];
      }
    }
    planes.push(plane);
  }
  return { kind, q, planes, width, height };
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) {
      out[i] = bin.charCodeAt(i);
    }
    return out;
  }
  return Uint8Array.from(Buffer.from(b64, "base64"));
}
