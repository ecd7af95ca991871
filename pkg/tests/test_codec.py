import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvnav import codec
from mvnav.codec import (DEFAULT_LADDER, DEPTH_RANGE, DIFF_RANGE,
                         RESIDUAL_RANGE, GopStructure, QuantLadder,
                         decode_gop, decode_intra, encode_gop, encode_intra,
                         lower_convex_hull, rd_sweep)
from mvnav.errors import BadDimensions, CorruptStream


class TestLadder:
    def test_rejects_non_increasing(self):
        with pytest.raises(BadDimensions):
            QuantLadder((4, 4, 8))

    def test_index(self):
        lad = QuantLadder((4, 8, 16))
        assert lad.index(8) == 1
        with pytest.raises(BadDimensions):
            lad.index(5)

    def test_gop_sizes(self):
        with pytest.raises(BadDimensions):
            GopStructure(3)


class TestBits:
    def test_exp_golomb_table(self):
        # canonical order-0 codes
        assert codec._ue_bits(0) == "1"
        assert codec._ue_bits(1) == "010"
        assert codec._ue_bits(2) == "011"
        assert codec._ue_bits(3) == "00100"
        assert codec._se_bits(1) == "010"
        assert codec._se_bits(-1) == "011"
        assert codec._se_bits(2) == "00100"
        assert codec._se_bits(-2) == "00101"

    @given(st.integers(min_value=0, max_value=5000))
    @settings(max_examples=100, deadline=None)
    def test_ue_roundtrip(self, n):
        bits = codec._ue_bits(n)
        payload = int(bits + "0" * (-len(bits) % 8), 2).to_bytes(
            (len(bits) + 7) // 8, "big")
        assert codec._BitReader(payload).read_ue() == n

    @given(st.integers(min_value=-2000, max_value=2000))
    @settings(max_examples=100, deadline=None)
    def test_se_roundtrip(self, s):
        bits = codec._se_bits(s) if s != 0 else None
        if bits is None:
            return
        payload = int(bits + "0" * (-len(bits) % 8), 2).to_bytes(
            (len(bits) + 7) // 8, "big")
        assert codec._BitReader(payload).read_se() == s


class TestZigzag:
    def test_canonical_prefix(self):
        assert list(codec._ZIGZAG[:10]) == [0, 1, 8, 16, 9, 2, 3, 10, 17, 24]

    def test_permutation(self):
        assert sorted(codec._ZIGZAG) == list(range(64))
        assert np.array_equal(codec._ZIGZAG[codec._UNZIGZAG],
                              np.arange(64))


class TestIntra:
    def test_constant_plane_dc_oracle(self):
        """A constant-128 block has a single DC coefficient 8*128 = 1024
        under the orthonormal DCT; at q=4 the level is exactly 256 and the
        reconstruction is exact."""
        plane = np.full((8, 8), 128, dtype=np.uint8)
        blocks = codec._to_blocks(plane.astype(np.float64))
        coefs = np.einsum("ij,njk,lk->nil", codec._DCT, blocks, codec._DCT)
        assert coefs[0, 0, 0] == pytest.approx(1024.0)
        assert np.max(np.abs(coefs.ravel()[1:])) < 1e-9

        enc = encode_intra(plane, 4)
        dec = decode_intra(enc)
        assert np.array_equal(dec, plane)

    def test_header_layout(self):
        img = np.zeros((32, 48, 3), dtype=np.uint8)
        enc = encode_intra(img, 8, kind="intra")
        r = codec._BitReader(enc.payload)
        assert r.read_fixed(2) == codec.KIND_CODES["intra"]
        assert r.read_fixed(6) == DEFAULT_LADDER.index(8)
        assert r.read_fixed(8) == 48 // 16
        assert r.read_fixed(8) == 32 // 16

    def test_bits_are_exact_payload_count(self, rng):
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        enc = encode_intra(img, 4)
        assert (enc.bits + 7) // 8 == len(enc.payload)
        # trailing pad bits are zero
        r = codec._BitReader(enc.payload)
        r.pos = enc.bits
        rest = len(r.bits) - enc.bits
        assert rest < 8
        if rest:
            assert r.read_fixed(rest) == 0

    def test_color_roundtrip_close_at_fine_q(self, rng):
        img = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        enc = encode_intra(img, 4)
        dec = decode_intra(enc)
        err = dec.astype(np.float64) - img.astype(np.float64)
        assert np.mean(err ** 2) < np.mean(
            (decode_intra(encode_intra(img, 64),
                          value_range=(0, 255)).astype(np.float64)
             - img.astype(np.float64)) ** 2)

    def test_rate_decreases_with_q(self, rng):
        img = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        bits = [encode_intra(img, q).bits for q in DEFAULT_LADDER.steps]
        assert bits[0] > bits[-1]
        assert all(a >= b for a, b in zip(bits, bits[1:]))

    def test_residual_roundtrip(self, rng):
        res = rng.integers(-200, 201, size=(16, 16, 3)).astype(np.int16)
        enc = encode_intra(res, 4, kind="residual")
        dec = decode_intra(enc, value_range=RESIDUAL_RANGE)
        assert dec.dtype == np.int16
        assert np.max(np.abs(dec.astype(np.int32) - res)) <= 4 * 8

    def test_depth_plane_with_padding(self, rng):
        """8x8 block-depth planes are edge-padded to 16 and cropped back."""
        codes = rng.integers(0, 65536, size=(8, 8), dtype=np.uint16)
        enc = encode_intra(codes, 4, kind="intra")
        dec = decode_intra(enc, value_range=DEPTH_RANGE)
        assert dec.shape == (8, 8)
        assert dec.dtype == np.uint16

    def test_rejects_bad_dims(self):
        with pytest.raises(BadDimensions):
            encode_intra(np.zeros((10, 8), dtype=np.uint8), 4)
        with pytest.raises(BadDimensions):
            encode_intra(np.zeros((8,), dtype=np.uint8), 4)

    def test_deterministic(self, rng):
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        assert encode_intra(img, 8).payload == encode_intra(img, 8).payload

    def test_highest_frequency_only_block(self):
        """A plane whose lone quantized coefficient sits at zigzag 63 would
        collide with EOB; the codec drops it and still round-trips."""
        i = np.arange(8)
        basis = np.outer(codec._DCT[7], codec._DCT[7])
        plane = np.rint(basis * 400).astype(np.int16)
        enc = encode_intra(plane, 64, kind="residual")
        dec = decode_intra(enc, value_range=RESIDUAL_RANGE)
        assert dec.shape == (8, 8)
        del i


class TestCorruption:
    def test_truncated_payload(self, rng):
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        enc = encode_intra(img, 8)
        bad = codec.EncodedFrame(payload=enc.payload[: len(enc.payload) // 2],
                                 bits=enc.bits, kind=enc.kind, q=enc.q,
                                 channels=3, width=16, height=16)
        with pytest.raises(CorruptStream):
            decode_intra(bad)

    def test_garbage_header(self):
        bad = codec.EncodedFrame(payload=b"\xff\xff\x00\x00\x00", bits=40,
                                 kind="intra", q=4, channels=1,
                                 width=16, height=16)
        with pytest.raises(CorruptStream):
            decode_intra(bad)


class TestGop:
    def test_kind_schedule(self, rng):
        frames = [rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
                  for _ in range(8)]
        encs = encode_gop(frames, GopStructure(4), 8)
        assert [e.kind for e in encs] == ["intra", "predicted", "predicted",
                                          "predicted"] * 2

    def test_closed_loop_decode(self, rng):
        base = rng.integers(60, 200, size=(16, 16, 3)).astype(np.int16)
        frames = [np.clip(base + 3 * t, 0, 255).astype(np.uint8)
                  for t in range(6)]
        encs = encode_gop(frames, GopStructure(2), 4)
        recon = decode_gop(encs)
        for t, r in enumerate(recon):
            err = r.astype(np.float64) - frames[t].astype(np.float64)
            assert np.mean(err ** 2) < 50.0

    def test_p_frames_cheaper_on_static_content(self, rng):
        frame = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        encs = encode_gop([frame] * 4, GopStructure(4), 8)
        assert encs[1].bits < encs[0].bits / 4

    def test_decode_requires_intra_start(self, rng):
        frames = [rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
                  for _ in range(2)]
        encs = encode_gop(frames, GopStructure(2), 8)
        with pytest.raises(CorruptStream):
            decode_gop(encs[1:])


def hull_oracle(points):
    """O(n^3) reference: monotone frontier, then keep a point only if it is
    strictly below every chord of other frontier points spanning it."""
    pts = sorted(set((int(r), float(d)) for r, d in points))
    frontier = []
    best = np.inf
    for r, d in pts:
        if d < best:
            frontier.append((r, d))
            best = d
    keep = []
    for i, (r, d) in enumerate(frontier):
        on_hull = True
        for a in frontier:
            for b in frontier:
                if a[0] < r < b[0]:
                    # chord height at r
                    lam = (r - a[0]) / (b[0] - a[0])
                    chord = a[1] + lam * (b[1] - a[1])
                    if d >= chord - 1e-12:
                        on_hull = False
        if on_hull:
            keep.append((r, d))
        del i
    return keep


class TestHull:
    def test_simple(self):
        pts = [(10, 100.0), (20, 50.0), (30, 45.0), (40, 10.0)]
        hull = lower_convex_hull(pts)
        assert (10, 100.0) in hull and (40, 10.0) in hull
        assert (30, 45.0) not in hull    # above the 20 -> 40 chord

    def test_drops_dominated(self):
        pts = [(10, 50.0), (20, 60.0), (30, 40.0)]
        hull = lower_convex_hull(pts)
        assert (20, 60.0) not in hull

    @given(st.lists(st.tuples(st.integers(min_value=1, max_value=500),
                              st.floats(min_value=0.01, max_value=100.0)),
                    min_size=1, max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle(self, pts):
        hull = lower_convex_hull(pts)
        oracle = hull_oracle(pts)
        assert set(oracle) <= set(hull)
        # hull is valid: increasing rate, decreasing mse, convex slopes
        for (r1, d1), (r2, d2) in zip(hull, hull[1:]):
            assert r2 > r1 and d2 < d1
        slopes = [(d2 - d1) / (r2 - r1)
                  for (r1, d1), (r2, d2) in zip(hull, hull[1:])]
        for s1, s2 in zip(slopes, slopes[1:]):
            assert s2 >= s1 - 1e-9


class TestRdSweep:
    def test_hull_shape(self, rng):
        img = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        pts = rd_sweep(img)
        assert len(pts) >= 2
        for (r1, d1), (r2, d2) in zip(pts, pts[1:]):
            assert r2 > r1 and d2 < d1
