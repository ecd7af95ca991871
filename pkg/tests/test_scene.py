import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvnav.errors import (BadCalibration, DegenerateSpec, DimensionMismatch,
                          MissingFile)
from mvnav.scene import (CameraParams, DepthMap, RectSpec, SceneSpec,
                         ViewGrid, code_from_depth, default_scene_spec,
                         depth_from_code, generate_synthetic_scene,
                         interpolate_camera, load_sequence, read_pgm16,
                         read_ppm, save_sequence, write_pgm16, write_ppm)


def _cam(tx=0.0, f=64.0):
    k = np.array([[f, 0, 31.5], [0, f, 31.5], [0, 0, 1.0]])
    return CameraParams(intrinsic=k, rotation=np.eye(3),
                        translation=np.array([tx, 0.0, 0.0]))


class TestCameraParams:
    def test_center_is_minus_rt_t(self):
        cam = _cam(tx=-1.5)
        assert np.allclose(cam.center, [1.5, 0, 0])

    def test_rejects_non_orthonormal_rotation(self):
        with pytest.raises(BadCalibration):
            CameraParams(intrinsic=np.eye(3), rotation=np.eye(3) * 1.001,
                         translation=np.zeros(3))

    def test_rejects_nonpositive_focal(self):
        k = np.diag([-1.0, 1.0, 1.0])
        with pytest.raises(BadCalibration):
            CameraParams(intrinsic=k, rotation=np.eye(3),
                         translation=np.zeros(3))

    def test_arrays_read_only(self):
        cam = _cam()
        with pytest.raises(ValueError):
            cam.intrinsic[0, 0] = 5.0


class TestInterpolateCamera:
    def test_endpoints_exact(self):
        a, b = _cam(0.0), _cam(-1.0)
        assert interpolate_camera(a, b, 0.0) is a
        assert interpolate_camera(a, b, 1.0) is b

    def test_midpoint_translation(self):
        a, b = _cam(0.0), _cam(-1.0)
        mid = interpolate_camera(a, b, 0.5)
        assert np.allclose(mid.translation, [-0.5, 0, 0])
        assert np.max(np.abs(mid.rotation.T @ mid.rotation - np.eye(3))) <= 1e-9

    def test_rotation_interpolation_stays_orthonormal(self):
        from scipy.spatial.transform import Rotation
        ra = Rotation.from_euler("y", 2, degrees=True).as_matrix()
        rb = Rotation.from_euler("y", -2, degrees=True).as_matrix()
        a = CameraParams(intrinsic=np.eye(3), rotation=ra,
                         translation=np.zeros(3))
        b = CameraParams(intrinsic=np.eye(3), rotation=rb,
                         translation=np.zeros(3))
        mid = interpolate_camera(a, b, 0.5)
        assert np.allclose(mid.rotation, np.eye(3), atol=1e-9)


class TestDepthCodes:
    def test_extremes(self):
        assert depth_from_code(65535, 2.0, 50.0) == pytest.approx(2.0)
        assert depth_from_code(0, 2.0, 50.0) == pytest.approx(50.0)

    def test_linear_in_inverse_depth(self):
        # the code midpoint maps to the harmonic midpoint of 1/z
        z = depth_from_code(65535 / 2, 2.0, 50.0)
        assert 1.0 / z == pytest.approx(0.5 * (1 / 2.0 + 1 / 50.0))

    @given(st.floats(min_value=2.0, max_value=50.0))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_within_quantization(self, z):
        code = code_from_depth(z, 2.0, 50.0)
        z2 = depth_from_code(code, 2.0, 50.0)
        # one code step of 1/z resolution
        step = (1 / 2.0 - 1 / 50.0) / 65535
        assert abs(1 / z - 1 / z2) <= step


class TestViewGrid:
    def test_layout(self):
        g = ViewGrid(n_ref_views=3, n_intermediate=2)
        assert g.total_views == 7
        assert [v for v in range(7) if g.is_reference(v)] == [0, 3, 6]
        assert g.bracketing_refs(4) == (3, 6)
        assert g.bracketing_refs(3) == (3, 3)
        assert g.alpha(4) == pytest.approx(1 / 3)

    def test_camera_for_reference_is_identity(self, small_seq, small_grid):
        cam = small_grid.camera_for(0, small_seq.cameras)
        assert cam is small_seq.cameras[0]


class TestPnmIo:
    def test_ppm_roundtrip(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(16, 24, 3), dtype=np.uint8)
        p = tmp_path / "x.ppm"
        write_ppm(p, img)
        assert np.array_equal(read_ppm(p), img)

    def test_pgm16_roundtrip(self, tmp_path, rng):
        codes = rng.integers(0, 65536, size=(16, 24), dtype=np.uint16)
        p = tmp_path / "x.pgm"
        write_pgm16(p, codes)
        assert np.array_equal(read_pgm16(p), codes)


class TestSyntheticScene:
    def test_deterministic(self):
        spec = default_scene_spec(64, 64, 2, 2, seed=7)
        a = generate_synthetic_scene(spec, seed=7)
        b = generate_synthetic_scene(spec, seed=7)
        assert np.array_equal(a.colors[0][0], b.colors[0][0])
        assert np.array_equal(a.depths[1][1].codes, b.depths[1][1].codes)

    def test_requires_rects(self):
        with pytest.raises(DegenerateSpec):
            generate_synthetic_scene(SceneSpec(rects=()), seed=0)

    def test_rejects_depth_outside_range(self):
        spec = SceneSpec(rects=(RectSpec(0, 0, 1, 1, z=100.0),))
        with pytest.raises(DegenerateSpec):
            generate_synthetic_scene(spec, seed=0)

    def test_disparity_matches_geometry(self):
        """A fronto-parallel surface at depth z shifts by f*baseline/z
        pixels between adjacent cameras."""
        spec = SceneSpec(width=64, height=64, n_views=2, n_frames=1,
                         baseline=0.5, z_near=2.0, z_far=50.0,
                         rects=(RectSpec(-10, -10, 20, 20, z=4.0, texel=0.5),))
        seq = generate_synthetic_scene(spec, seed=3)
        d = round(64.0 * 0.5 / 4.0)   # f = width
        left, right = seq.colors[0][0], seq.colors[1][0]
        # view 1 sits at +x, so content moves left by d pixels
        assert np.array_equal(right[:, : 64 - d], left[:, d:])

    def test_occluder_wins_depth(self):
        spec = SceneSpec(width=64, height=64, n_views=1, n_frames=1,
                         rects=(RectSpec(-20, -20, 40, 40, z=20.0, texel=1.0),
                                RectSpec(-1, -1, 2, 2, z=4.0, texel=0.5)))
        seq = generate_synthetic_scene(spec, seed=0)
        z = seq.depths[0][0].to_metric()
        assert z[32, 32] == pytest.approx(4.0, rel=1e-3)
        assert z[4, 4] == pytest.approx(20.0, rel=1e-3)


class TestSequenceIo:
    def test_save_load_roundtrip(self, tmp_path):
        spec = default_scene_spec(64, 64, 2, 2, seed=1)
        seq = generate_synthetic_scene(spec, seed=1)
        mpath = save_sequence(seq, tmp_path / "seq")
        seq2 = load_sequence(mpath)
        assert seq2.n_views == seq.n_views and seq2.n_frames == seq.n_frames
        assert np.array_equal(seq2.colors[1][1], seq.colors[1][1])
        assert np.array_equal(seq2.depths[0][1].codes, seq.depths[0][1].codes)
        assert np.allclose(seq2.cameras[1].translation,
                           seq.cameras[1].translation)

    def test_missing_frame_file(self, tmp_path):
        spec = default_scene_spec(64, 64, 2, 2, seed=1)
        seq = generate_synthetic_scene(spec, seed=1)
        mpath = save_sequence(seq, tmp_path / "seq")
        (tmp_path / "seq" / "color_v1_t1.ppm").unlink()
        with pytest.raises(MissingFile):
            load_sequence(mpath)

    def test_dimension_mismatch(self):
        cam = _cam()
        colors = [[np.zeros((64, 64, 3), dtype=np.uint8)]]
        depths = [[DepthMap(np.zeros((32, 64), dtype=np.uint16), 2.0, 50.0)]]
        from mvnav.scene import MultiviewSequence
        seq = MultiviewSequence(cameras=[cam], colors=colors, depths=depths,
                                width=64, height=64, fps=15, z_near=2.0,
                                z_far=50.0)
        with pytest.raises(DimensionMismatch):
            seq.validate()
