/** Orthonormal 8x8 DCT-II basis, fixed to the exact float64 values of the
 * server codec (shortest round-trip decimal literals, so each entry parses
 * to the identical IEEE-754 double). Decoding must be bit-exact; do not
 * regenerate these with Math.cos, whose last-ulp behavior differs across
 * libm implementations. */
export const DCT: readonly (readonly number[])[] = [
  [0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738],
  [0.4903926402016152, 0.4157348061512726, 0.27778511650980114, 0.09754516100806417, -0.0975451610080641, -0.277785116509801, -0.4157348061512727, -0.4903926402016152],
  [0.46193976625564337, 0.19134171618254492, -0.19134171618254486, -0.46193976625564337, -0.4619397662556434, -0.19134171618254517, 0.191341716182545, 0.46193976625564326],
  [0.4157348061512726, -0.0975451610080641, -0.4903926402016152, -0.2777851165098011, 0.2777851165098009, 0.4903926402016153, 0.09754516100806396, -0.4157348061512721],
  [0.3535533905932738, -0.35355339059327373, -0.35355339059327384, 0.3535533905932737, 0.35355339059327384, -0.35355339059327334, -0.35355339059327356, 0.3535533905932733],
  [0.27778511650980114, -0.4903926402016152, 0.09754516100806415, 0.41573480615127273, -0.41573480615127256, -0.09754516100806489, 0.49039264020161516, -0.27778511650980076],
  [0.19134171618254492, -0.4619397662556434, 0.46193976625564326, -0.19134171618254495, -0.19134171618254528, 0.4619397662556437, -0.46193976625564354, 0.19134171618254314],
  [0.09754516100806417, -0.2777851165098011, 0.41573480615127273, -0.4903926402016153, 0.4903926402016152, -0.415734806151272, 0.2777851165098022, -0.09754516100806254],
];

/** Zigzag scan order: ZIGZAG[scanIndex] = raster index. */
export function zigzagOrder(): number[] {
  const idx: number[] = [];
  for (let s = 0; s < 15; s++) {
    const cells: [number, number][] = [];
    for (let i = Math.max(0, s - 7); i <= Math.min(s, 7); i++) {
      cells.push([i, s - i]);
    }
    if (s % 2 === 0) {
      cells.reverse();
    }
    for (const [r, c] of cells) {
      idx.push(r * 8 + c);
    }
  }
  return idx;
}

/** UNZIGZAG[rasterIndex] = scan index. */
export function unzigzagOrder(): number[] {
  const zz = zigzagOrder();
  const out = new Array<number>(64);
  for (let s = 0; s < 64; s++) {
    out[zz[s]] = s;
  }
  return out;
}
