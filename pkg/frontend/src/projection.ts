/** Block-based DIBR: one displacement per b x b block (unproject the block
 * center, reproject, round), whole-block copy, z-buffer keeping the smaller
 * target depth with scan-order ties. Mirrors the server's arithmetic exactly:
 * closed-form upper-triangular K inverse and round-half-to-even pixel
 * displacements. */

import type { CameraConfig } from "./types.js";

export interface Projected {
  /** H*W*3 pixels, zero on holes */
  rgb: Uint8Array;
  /** H*W, 1 where nothing landed */
  holes: Uint8Array;
  /** H*W target-camera depth, +Infinity on holes */
  zbuf: Float64Array;
}

/** numpy-style rint: round half to even. */
export function rintHalfEven(x: number): number {
  const f = Math.floor(x);
  const d = x - f;
  if (d > 0.5) return f + 1;
  if (d < 0.5) return f;
  return f % 2 === 0 ? f : f + 1;
}

export function depthFromCode(code: number, zNear: number, zFar: number): number {
  const inv = 1 / zFar + (code / 65535.0) * (1 / zNear - 1 / zFar);
  return 1.0 / inv;
}

/** Optical center -R^T t of a camera. */
export function cameraCenter(cam: CameraConfig): number[] {
  const { r, t } = cam;
  const out = new Array<number>(3);
  for (let i = 0; i < 3; i++) {
    out[i] = -(r[0][i] * t[0] + r[1][i] * t[1] + r[2][i] * t[2]);
  }
  return out;
}

export function projectView(
  color: Uint8Array,
  depthCodes: Int32Array,
  srcCam: CameraConfig,
  dstCam: CameraConfig,
  width: number,
  height: number,
  blockSize: number,
  zNear: number,
  zFar: number,
): Projected {
  const b = blockSize;
  const bw = width / b;
  const bh = height / b;
  const rgb = new Uint8Array(width * height * 3);
  const holes = new Uint8Array(width * height).fill(1);
  const zbuf = new Float64Array(width * height).fill(Infinity);

  const f = srcCam.k[0][0];
  const cx = srcCam.k[0][2];
  const cy = srcCam.k[1][2];
  // closed-form inverse of the upper-triangular intrinsic matrix
  const kinv = [
    [1 / f, 0.0, -cx / f],
    [0.0, 1 / f, -cy / f],
    [0.0, 0.0, 1.0],
  ];
  const rs = srcCam.r;
  const ts = srcCam.t;
  const rd = dstCam.r;
  const td = dstCam.t;
  const kd = dstCam.k;

  for (let jy = 0; jy < bh; jy++) {
    for (let jx = 0; jx < bw; jx++) {
      const u = jx * b + (b - 1) / 2.0;
      const v = jy * b + (b - 1) / 2.0;
      const z = depthFromCode(depthCodes[jy * bw + jx], zNear, zFar);
      const ray = [
        kinv[0][0] * u + kinv[0][1] * v + kinv[0][2],
        kinv[1][0] * u + kinv[1][1] * v + kinv[1][2],
        kinv[2][0] * u + kinv[2][1] * v + kinv[2][2],
      ];
      const pc = [ray[0] * z, ray[1] * z, ray[2] * z];
      const pmt = [pc[0] - ts[0], pc[1] - ts[1], pc[2] - ts[2]];
      // world = R_src^T (p_cam - t_src)
      const world = [
        rs[0][0] * pmt[0] + rs[1][0] * pmt[1] + rs[2][0] * pmt[2],
        rs[0][1] * pmt[0] + rs[1][1] * pmt[1] + rs[2][1] * pmt[2],
        rs[0][2] * pmt[0] + rs[1][2] * pmt[1] + rs[2][2] * pmt[2],
      ];
      const q = [
        rd[0][0] * world[0] + rd[0][1] * world[1] + rd[0][2] * world[2] + td[0],
        rd[1][0] * world[0] + rd[1][1] * world[1] + rd[1][2] * world[2] + td[1],
        rd[2][0] * world[0] + rd[2][1] * world[1] + rd[2][2] * world[2] + td[2],
      ];
      const z2 = q[2];
      if (!(z2 > 1e-9)) {
        continue;
      }
      const uvx = kd[0][0] * q[0] + kd[0][1] * q[1] + kd[0][2] * q[2];
      const uvy = kd[1][0] * q[0] + kd[1][1] * q[1] + kd[1][2] * q[2];
      const du = rintHalfEven(uvx / z2 - u);
      const dv = rintHalfEven(uvy / z2 - v);

      for (let py = 0; py < b; py++) {
        for (let px = 0; px < b; px++) {
          const sx = jx * b + px;
          const sy = jy * b + py;
          const dx = sx + du;
          const dy = sy + dv;
          if (dx < 0 || dx >= width || dy < 0 || dy >= height) {
            continue;
          }
          const di = dy * width + dx;
          // strict comparison: scan-order-earlier blocks win ties
          if (z2 < zbuf[di]) {
            zbuf[di] = z2;
            const si = sy * width + sx;
            rgb[di * 3] = color[si * 3];
            rgb[di * 3 + 1] = color[si * 3 + 1];
            rgb[di * 3 + 2] = color[si * 3 + 2];
            holes[di] = 0;
          }
        }
      }
    }
  }
  return { rgb, holes, zbuf };
}

/** Inverse-distance blend of two projections; single-source pixels pass
 * through; holes stay holes. */
export function fuseProjections(
  left: Projected,
  right: Projected,
  leftDist: number,
  rightDist: number,
  width: number,
  height: number,
): Projected {
  let wl: number;
  if (leftDist === 0) {
    wl = 1.0;
  } else if (rightDist === 0) {
    wl = 0.0;
  } else {
    wl = 1.0 / leftDist / (1.0 / leftDist + 1.0 / rightDist);
  }
  const n = width * height;
  const rgb = new Uint8Array(n * 3);
  const holes = new Uint8Array(n).fill(1);
  const zbuf = new Float64Array(n).fill(Infinity);
  for (let i = 0; i < n; i++) {
    const hl = left.holes[i];
    const hr = right.holes[i];
    if (!hl && !hr) {
      for (let c = 0; c < 3; c++) {
        rgb[i * 3 + c] = Math.floor(
          wl * left.rgb[i * 3 + c] + (1.0 - wl) * right.rgb[i * 3 + c] + 0.5,
        );
      }
      holes[i] = 0;
    } else if (!hl) {
      rgb.set(left.rgb.subarray(i * 3, i * 3 + 3), i * 3);
      holes[i] = 0;
    } else if (!hr) {
      rgb.set(right.rgb.subarray(i * 3, i * 3 + 3), i * 3);
      holes[i] = 0;
    }
    if (!holes[i]) {
      zbuf[i] = Math.min(left.zbuf[i], right.zbuf[i]);
    }
  }
  return { rgb, holes, zbuf };
}
