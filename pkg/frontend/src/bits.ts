/** MSB-first bit reader over a codec payload. */
export class BitReader {
  private pos = 0;

  constructor(private readonly data: Uint8Array) {}

  bit(): number {
    const byteIndex = this.pos >> 3;
    if (byteIndex >= this.data.length) {
      throw new Error("payload truncated");
    }
    const b = (this.data[byteIndex] >> (7 - (this.pos & 7))) & 1;
    this.pos += 1;
    return b;
  }

  fixed(n: number): number {
    let v = 0;
    for (let i = 0; i < n; i++) {
      v = (v << 1) | this.bit();
    }
    return v;
  }

  /** Order-0 exponential-Golomb, unsigned. */
  ue(): number {
    let k = 0;
    while (this.bit() === 0) {
      k += 1;
      if (k > 64) {
        throw new Error("malformed Golomb code");
      }
    }
    let v = 1;
    for (let i = 0; i < k; i++) {
      v = v * 2 + this.bit();
    }
    return v - 1;
  }

  /** Order-0 exponential-Golomb, signed (1 -> +1, 2 -> -1, ...). */
  se(): number {
    const n = this.ue();
    return n % 2 === 1 ? (n + 1) / 2 : -(n / 2);
  }
}
