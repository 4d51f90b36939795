import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stereopipe import FrameBuffer, OcclusionMask, StereoParams, VideoClip, psnr


def const_frame(value: float, h: int = 4, w: int = 4, c: int = 3) -> FrameBuffer:
    return FrameBuffer(np.full((h, w, c), value, dtype=np.float32))


class TestFrameBuffer:
    def test_shape_normalization(self):
        fb = FrameBuffer(np.zeros((3, 5), dtype=np.float32))
        assert (fb.height, fb.width, fb.channels) == (3, 5, 1)

    def test_rejects_bad_channels(self):
        with pytest.raises(ValueError):
            FrameBuffer(np.zeros((3, 5, 2), dtype=np.float32))

    def test_rejects_non_finite(self):
        data = np.zeros((2, 2, 1), dtype=np.float32)
        data[0, 0] = np.nan
        with pytest.raises(ValueError):
            FrameBuffer(data)

    def test_clamps_out_of_range(self):
        fb = FrameBuffer(np.array([[[-0.5, 0.5, 1.5]]], dtype=np.float32))
        assert fb.data.tolist() == [[[0.0, 0.5, 1.0]]]

    def test_data_is_readonly(self):
        fb = const_frame(0.5)
        with pytest.raises(ValueError):
            fb.data[0, 0, 0] = 1.0

    def test_uint8_maps_k_over_255_exactly(self):
        arr = np.arange(256, dtype=np.uint8).reshape(16, 16)
        fb = FrameBuffer.from_uint8(arr)
        expected = np.arange(256, dtype=np.float32).reshape(16, 16, 1) / np.float32(255.0)
        assert np.array_equal(fb.data, expected)

    @given(st.integers(min_value=0, max_value=255))
    def test_uint8_round_trip_identity(self, k):
        arr = np.full((2, 3, 3), k, dtype=np.uint8)
        assert np.array_equal(FrameBuffer.from_uint8(arr).to_uint8(), arr)

    def test_uint16_round_trip_identity(self):
        arr = np.arange(65536, dtype=np.uint16).reshape(256, 256)
        assert np.array_equal(FrameBuffer.from_uint16(arr).to_uint16(), arr[:, :, None])

    def test_crop(self):
        fb = FrameBuffer(np.random.default_rng(0).uniform(0, 1, (6, 8, 3)).astype(np.float32))
        sub = fb.crop(2, 1, 7, 4)
        assert (sub.height, sub.width) == (3, 5)
        assert np.array_equal(sub.data, fb.data[1:4, 2:7])
        with pytest.raises(ValueError):
            fb.crop(0, 0, 9, 2)


class TestVideoClip:
    def test_requires_frames(self):
        with pytest.raises(ValueError):
            VideoClip([])

    def test_requires_uniform_shape(self):
        with pytest.raises(ValueError):
            VideoClip([const_frame(0.1, 4, 4), const_frame(0.1, 4, 5)])

    def test_basic_access(self):
        clip = VideoClip([const_frame(0.1), const_frame(0.2)], fps=24.0)
        assert len(clip) == 2
        assert clip.fps == 24.0
        assert clip[1].data[0, 0, 0] == np.float32(0.2)


class TestStereoParams:
    def test_validation(self):
        StereoParams(40.0)
        with pytest.raises(ValueError):
            StereoParams(0.0)
        with pytest.raises(ValueError):
            StereoParams(40.0, convergence=1.5)
        with pytest.raises(ValueError):
            StereoParams(40.0, direction="sideways")


class TestPsnr:
    def test_identical_frames_capped(self):
        a = const_frame(0.25)
        assert psnr(a, a) == 99.0

    def test_uniform_difference_is_20db(self):
        a = const_frame(0.5)
        b = const_frame(0.4)
        assert psnr(a, b) == pytest.approx(20.0, rel=1e-6)

    def test_masked_clean_half_is_capped(self):
        a = np.full((4, 4, 3), 0.5, dtype=np.float32)
        b = a.copy()
        b[:, 2:] += 0.1
        valid = np.zeros((4, 4), dtype=bool)
        valid[:, :2] = True
        assert psnr(FrameBuffer(a), FrameBuffer(b), valid) == 99.0

    def test_valid_accepts_mask_complement(self):
        a = const_frame(0.5)
        b = const_frame(0.6)
        mask = OcclusionMask(np.zeros((4, 4), dtype=bool))
        assert psnr(a, b, ~mask.values) == pytest.approx(20.0, rel=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            psnr(const_frame(0.5, 4, 4), const_frame(0.5, 4, 5))

    def test_zero_valid_pixels(self):
        a = const_frame(0.5)
        with pytest.raises(ValueError):
            psnr(a, a, np.zeros((4, 4), dtype=bool))

    @settings(max_examples=50)
    @given(st.floats(min_value=0.05, max_value=0.45, allow_nan=False))
    def test_symmetry_bit_exact(self, delta):
        rng = np.random.default_rng(0)
        a = FrameBuffer(rng.uniform(0, 0.5, (5, 5, 3)).astype(np.float32))
        b = FrameBuffer(np.clip(a.data + np.float32(delta), 0, 1))
        assert psnr(a, b) == psnr(b, a)

    def test_monotone_in_noise_amplitude(self):
        rng = np.random.default_rng(3)
        base = rng.uniform(0.3, 0.7, (8, 8, 3)).astype(np.float32)
        noise = rng.uniform(-1.0, 1.0, base.shape).astype(np.float32)
        scores = []
        for amp in (0.01, 0.05, 0.1):
            noisy = FrameBuffer(np.clip(base + amp * noise, 0, 1))
            scores.append(psnr(FrameBuffer(base), noisy))
        assert scores[0] > scores[1] > scores[2]
