/** Navigation state machine: the human (or a seeded replay) moves at most
 * one view per frame tick; at every anchor tick (t0 multiple of N_T) the
 * accumulated (v, prev_v) becomes the next REQUEST. By construction the
 * requested state always lies in the previously announced achievable cone —
 * protocol conformance is asserted in tests, not assumed. */

import type { RequestMessage, SessionConfigEcho } from "./types.js";

export type Direction = -1 | 0 | 1;

export class ViewerNav {
  /** current frame tick */
  t: number;
  /** current view */
  v: number;
  /** view at tick t-1 */
  prevV: number;

  constructor(
    private readonly cfg: Pick<SessionConfigEcho, "n_views" | "n_t" | "n_d">,
    startView: number,
    startT = 0,
  ) {
    if (startView < 0 || startView >= cfg.n_views) {
      throw new Error("start view outside the grid");
    }
    this.t = startT;
    this.v = startView;
    this.prevV = startView;
  }

  /** Advance one frame tick, moving at most one view, clamped to the grid. */
  tick(direction: Direction): void {
    let next = this.v + direction;
    if (next < 0) next = 0;
    if (next >= this.cfg.n_views) next = this.cfg.n_views - 1;
    this.prevV = this.v;
    this.v = next;
    this.t += 1;
  }

  /** True when the current tick is a request anchor. */
  requestDue(): boolean {
    return this.t % this.cfg.n_t === 0;
  }

  makeRequest(): RequestMessage {
    return { type: "REQUEST", t0: this.t, v: this.v, prev_v: this.prevV };
  }

  /** Display window announced for a request anchored at t0. */
  windowFor(t0: number): [number, number] {
    return [t0 + this.cfg.n_d + 1, t0 + this.cfg.n_d + this.cfg.n_t];
  }
}

/** Achievable-cone membership: from state (v0, t0) the user can reach view
 * v at time t iff |v - v0| <= t - t0 (one switch per frame tick). */
export function withinCone(
  v0: number,
  t0: number,
  v: number,
  t: number,
): boolean {
  return t >= t0 && Math.abs(v - v0) <= t - t0;
}

/** Deterministic 32-bit PRNG for seeded interaction replays. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
