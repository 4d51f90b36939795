import numpy as np
import pytest

from stereopipe import (
    DisparityMap,
    FrameBuffer,
    SplatOptions,
    VideoClip,
    forward_splat_clip,
    forward_splat_frame,
    psnr,
    splat_weight,
)

from conftest import random_instance, reference_splat, square_scene


class TestSplatWeight:
    def test_zero_gap_is_one(self):
        assert splat_weight(5.0, 5.0) == 1.0

    def test_gap_two_is_half(self):
        assert splat_weight(0.0, 2.0) == 0.5

    def test_gap_ten_is_2_pow_neg5(self):
        assert splat_weight(-8.0, 2.0) == 0.03125

    def test_floor_applies(self):
        assert splat_weight(0.0, 1000.0, exponent_floor=-60.0) == splat_weight(0.0, 60.0)

    def test_monotone_in_priority(self):
        weights = [splat_weight(p, 0.0) for p in (-9.0, -4.5, -1.0, 0.0)]
        assert weights == sorted(weights)
        assert all(0.0 < w <= 1.0 for w in weights)


def splat(frame, disp, priority=None, opts=SplatOptions(), **kw):
    return forward_splat_frame(FrameBuffer(frame), DisparityMap(disp), priority, opts, **kw)


class TestForwardSplatFrame:
    def test_zero_disparity_is_identity(self, rng):
        frame = rng.uniform(0, 1, (9, 7, 3)).astype(np.float32)
        res = splat(frame, np.zeros((9, 7), dtype=np.float32))
        assert np.array_equal(res.warped.data, frame)
        assert not res.mask.any()
        assert np.array_equal(res.coverage, np.ones((9, 7)))

    def test_row_example_depth_blend(self):
        # colors [a, b, c, d] at d = [0, 0, -2, -2]: targets 0/1 blend the
        # near (shifted) pixels at full weight against the far ones at 1/2.
        a, b, c, d = 0.1, 0.9, 0.3, 0.7
        frame = np.array([[[a], [b], [c], [d]]], dtype=np.float32)
        disp = np.array([[0.0, 0.0, -2.0, -2.0]], dtype=np.float32)
        res = splat(frame, disp)
        a64, b64, c64, d64 = (np.float64(np.float32(v)) for v in (a, b, c, d))
        exp0 = np.float32((0.5 * a64 + c64) / 1.5)
        exp1 = np.float32((0.5 * b64 + d64) / 1.5)
        assert res.warped.data[0, 0, 0] == exp0
        assert res.warped.data[0, 1, 0] == exp1
        assert res.mask.values.tolist() == [[False, False, True, True]]
        assert res.warped.data[0, 2, 0] == 0.0 and res.warped.data[0, 3, 0] == 0.0

    def test_out_of_bounds_contribution_dropped(self):
        # source 0 at d=-0.5 keeps only its right-neighbor share; source 1
        # lands fully out of bounds, so target 1 is a hole.
        frame = np.array([[[0.6], [0.2]]], dtype=np.float32)
        disp = np.array([[-0.5, -2.5]], dtype=np.float32)
        res = splat(frame, disp)
        assert res.warped.data[0, 0, 0] == np.float32(0.6)
        assert res.coverage[0, 0] == 0.5
        assert res.mask.values.tolist() == [[False, True]]

    def test_matches_reference_oracle(self, rng):
        for _ in range(25):
            frame, disp, priority = random_instance(rng)
            res = splat(frame, disp, priority)
            ref_warped, ref_hole, ref_cov = reference_splat(frame, disp, priority)
            assert np.array_equal(res.warped.data, ref_warped)
            assert np.array_equal(res.mask.values, ref_hole)
            assert np.array_equal(res.coverage, ref_cov)

    def test_priority_shift_invariance(self, rng):
        frame, disp, priority = random_instance(rng, max_dim=24)
        base = splat(frame, disp, priority)
        for k in (-7.5, 1.0, 12.25):
            shifted = splat(frame, disp, priority + k)
            assert np.max(np.abs(shifted.warped.data - base.warped.data)) <= 1e-6
            assert np.array_equal(shifted.mask.values, base.mask.values)

    def test_mask_matches_coverage_threshold(self, rng):
        frame, disp, priority = random_instance(rng)
        opts = SplatOptions(coverage_threshold=0.25)
        res = splat(frame, disp, priority, opts)
        assert np.array_equal(res.mask.values, res.coverage < 0.25)

    def test_output_within_source_range(self, rng):
        for _ in range(5):
            frame, disp, priority = random_instance(rng, max_dim=16)
            res = splat(frame, disp, priority)
            ok = ~res.mask.values
            for ch in range(frame.shape[2]):
                vals = res.warped.data[:, :, ch][ok]
                if vals.size:
                    assert vals.min() >= frame[:, :, ch].min() - 1e-9
                    assert vals.max() <= frame[:, :, ch].max() + 1e-9

    def test_hole_fill_value(self):
        frame = np.array([[[0.6], [0.2]]], dtype=np.float32)
        disp = np.array([[-0.5, -2.5]], dtype=np.float32)
        res = splat(frame, disp, opts=SplatOptions(hole_fill_value=0.75))
        assert res.warped.data[0, 1, 0] == np.float32(0.75)

    def test_mask_dilation(self):
        scene = square_scene()
        opts = SplatOptions(mask_dilation_px=2)
        res = forward_splat_frame(scene.left, scene.disparity, opts=opts)
        base = forward_splat_frame(scene.left, scene.disparity)
        assert res.mask.values.sum() > base.mask.values.sum()
        assert res.mask.values[base.mask.values].all()

    def test_workers_do_not_change_output(self, rng):
        frame = rng.uniform(0, 1, (97, 33, 3)).astype(np.float32)
        disp = rng.uniform(-6, 6, (97, 33)).astype(np.float32)
        base = splat(frame, disp, workers=1)
        for workers in (2, 4):
            res = splat(frame, disp, workers=workers)
            assert np.array_equal(res.warped.data, base.warped.data)
            assert np.array_equal(res.mask.values, base.mask.values)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            splat(np.zeros((3, 3, 1), dtype=np.float32), np.zeros((3, 4), dtype=np.float32))

    def test_vertical_offset_splits_rows(self):
        # one bright pixel pushed down half a row splits evenly between rows
        frame = np.zeros((2, 1, 1), dtype=np.float32)
        frame[0, 0, 0] = 1.0
        disp = np.zeros((2, 1), dtype=np.float32)
        vy = np.array([[0.5], [0.0]], dtype=np.float32)
        res = splat(frame, disp, vertical_offset=vy, opts=SplatOptions(coverage_threshold=0.0))
        assert res.coverage[0, 0] == 0.5
        assert res.coverage[1, 0] == 1.5
        assert res.warped.data[0, 0, 0] == np.float32(1.0)


class TestSquareScene:
    def test_round_trip_exact_and_band_width(self):
        scene = square_scene()
        res = forward_splat_frame(scene.left, scene.disparity)
        assert np.array_equal(res.mask.values, scene.holes)
        assert psnr(res.warped, scene.composite, ~scene.holes) == 99.0
        r0, r1 = scene.square_rows
        b0, b1 = scene.band_cols
        assert b1 - b0 == 10
        band = res.mask.values[r0:r1, b0:b1]
        assert band.all()
        assert not res.mask.values[r0:r1, b0 - 1].any()
        assert not res.mask.values[r0:r1, b1].any()


class TestForwardSplatClip:
    def make_clip(self, frames):
        return VideoClip([FrameBuffer(f) for f in frames])

    def test_zero_disparity_identity(self, rng):
        frames = [rng.uniform(0, 1, (5, 6, 3)).astype(np.float32) for _ in range(3)]
        clip = self.make_clip(frames)
        disp = [DisparityMap(np.zeros((5, 6), dtype=np.float32)) for _ in range(3)]
        results = forward_splat_clip(clip, disp)
        assert len(results) == 3
        for r, f in zip(results, frames):
            assert np.array_equal(r.warped.data, f)
            assert not r.mask.any()

    def test_duplicate_frames_give_identical_results(self, rng):
        frame = rng.uniform(0, 1, (6, 6, 3)).astype(np.float32)
        d = rng.uniform(-3, 3, (6, 6)).astype(np.float32)
        clip = self.make_clip([frame, frame.copy()])
        results = forward_splat_clip(clip, [DisparityMap(d), DisparityMap(d.copy())])
        assert np.array_equal(results[0].warped.data, results[1].warped.data)
        assert np.array_equal(results[0].mask.values, results[1].mask.values)

    def test_per_frame_matches_single_frame(self):
        frame = np.array([[[0.1], [0.9], [0.3], [0.7]]], dtype=np.float32)
        disp = np.array([[0.0, 0.0, -2.0, -2.0]], dtype=np.float32)
        clip = self.make_clip([frame, frame.copy()])
        results = forward_splat_clip(clip, [DisparityMap(disp), DisparityMap(disp.copy())])
        single = forward_splat_frame(FrameBuffer(frame), DisparityMap(disp))
        for r in results:
            assert np.array_equal(r.warped.data, single.warped.data)

    def test_count_mismatch(self, rng):
        clip = self.make_clip([rng.uniform(0, 1, (4, 4, 1)).astype(np.float32)])
        with pytest.raises(ValueError):
            forward_splat_clip(clip, [])

    def test_clip_workers_match_serial(self, rng):
        frames = [rng.uniform(0, 1, (16, 20, 3)).astype(np.float32) for _ in range(4)]
        disp = [DisparityMap(rng.uniform(-4, 4, (16, 20)).astype(np.float32)) for _ in range(4)]
        clip = self.make_clip(frames)
        serial = forward_splat_clip(clip, disp, workers=1)
        threaded = forward_splat_clip(clip, disp, workers=4)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.warped.data, b.warped.data)
