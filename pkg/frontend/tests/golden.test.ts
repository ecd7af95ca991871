/** Cross-implementation decode equality: the golden corpus holds raw BUNDLE
 * wire messages from a seeded session plus the displayed frames decoded by
 * the server-side reference decoder. The viewer decoder must reproduce
 * every displayed frame byte for byte. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { BundleDecoder } from "../src/decoder.js";
import type { BundleMessage, SessionConfigEcho } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const config = JSON.parse(
  readFileSync(join(here, "golden/config.json"), "utf8"),
) as SessionConfigEcho;
const session = JSON.parse(
  readFileSync(join(here, "golden/session.json"), "utf8"),
) as {
  positions: Record<string, number>;
  bundles: BundleMessage[];
  expected_frames: { t: number; v: number; rgb_b64: string }[];
};

describe("golden corpus decode equality", () => {
  it("decodes every displayed frame byte-identically to the reference decoder", () => {
    const decoder = new BundleDecoder(config);
    for (const bundle of session.bundles) {
      decoder.ingest(bundle);
    }
    expect(session.expected_frames.length).toBeGreaterThan(0);
    for (const frame of session.expected_frames) {
      const got = decoder.displayFrame(frame.v, frame.t);
      const expected = Uint8Array.from(Buffer.from(frame.rgb_b64, "base64"));
      expect(got.length).toBe(expected.length);
      expect(Buffer.from(got).equals(Buffer.from(expected)),
        `frame v=${frame.v} t=${frame.t} differs`).toBe(true);
    }
  });

  it("covers reference, predicted, depth, and side-frame payload kinds", () => {
    const kinds = new Set<string>();
    for (const bundle of session.bundles) {
      for (const f of bundle.frames) {
        kinds.add(`${f.role}:${f.kind}`);
      }
    }
    expect(kinds).toContain("ref_color:intra");
    expect(kinds).toContain("ref_color:predicted");
    expect(kinds).toContain("ref_depth:intra");
    expect(kinds).toContain("eframe:residual");
  });

  it("window frames are all available after ingest", () => {
    const decoder = new BundleDecoder(config);
    for (const bundle of session.bundles) {
      decoder.ingest(bundle);
      for (let t = bundle.window[0]; t <= bundle.window[1]; t++) {
        const v = session.positions[String(t)];
        expect(decoder.hasFrame(v, t)).toBe(true);
      }
    }
  });
});
