/** Length-prefixed JSON wire framing: 4-byte big-endian payload length
 * followed by UTF-8 JSON. One connection carries one session. */

import type { WireMessage } from "./types.js";

export const MAX_MESSAGE = 1 << 28;

export function packMessage(msg: WireMessage): Uint8Array {
  const body = new TextEncoder().encode(JSON.stringify(msg));
  if (body.length > MAX_MESSAGE) {
    throw new Error("message too large");
  }
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/** Incremental frame splitter for a byte stream. Feed chunks, read whole
 * messages as they complete. */
export class MessageSplitter {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): WireMessage[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const out: WireMessage[] = [];
    for (;;) {
      if (this.buffer.length < 4) {
        break;
      }
      const size = new DataView(
        this.buffer.buffer, this.buffer.byteOffset).getUint32(0, false);
      if (size > MAX_MESSAGE) {
        throw new Error("corrupt stream: oversized message");
      }
      if (this.buffer.length < 4 + size) {
        break;
      }
      const body = this.buffer.subarray(4, 4 + size);
      const parsed: unknown = JSON.parse(new TextDecoder().decode(body));
      if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
        throw new Error("corrupt stream: message is not an object");
      }
      out.push(parsed as WireMessage);
      this.buffer = this.buffer.slice(4 + size);
    }
    return out;
  }

  /** Bytes held back waiting for a complete frame. */
  get pending(): number {
    return this.buffer.length;
  }
}

export function hello(config: object = {}): WireMessage {
  return { type: "HELLO", config };
}

export function request(t0: number, v: number, prevV: number): WireMessage {
  return { type: "REQUEST", t0, v, prev_v: prevV };
}

export function frameAck(t: number, v: number, psnr: number): WireMessage {
  return { type: "FRAME_ACK", t, v, psnr };
}
