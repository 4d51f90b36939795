"""Core value types shared across the pipeline, plus the PSNR metric.

All color data lives in ``(height, width, channels)`` float32 arrays with
values in [0, 1]. Arrays are made read-only at construction so instances can
be shared freely across worker threads without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PSNR_CAP_DB = 99.0

LEFT_TO_RIGHT = "left_to_right"
RIGHT_TO_LEFT = "right_to_left"


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


class FrameBuffer:
    """A single image: (H, W, C) float32 in [0, 1], C in {1, 3}.

    Values are clamped to [0, 1] at construction; non-finite input is
    rejected. ``data`` is read-only.
    """

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W) or (H, W, C) with C in {{1, 3}}, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"empty frame: shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("frame values must be finite")
        self.data = _readonly(np.clip(arr, 0.0, 1.0))

    @classmethod
    def _trusted(cls, data: np.ndarray) -> "FrameBuffer":
        # Fast path for internal producers whose kernels already guarantee
        # finite float32 (H, W, C) values in [0, 1].
        fb = cls.__new__(cls)
        fb.data = _readonly(data)
        return fb

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def from_uint8(cls, arr: np.ndarray) -> "FrameBuffer":
        arr = np.asarray(arr, dtype=np.uint8)
        return cls(arr.astype(np.float32) / np.float32(255.0))

    @classmethod
    def from_uint16(cls, arr: np.ndarray) -> "FrameBuffer":
        arr = np.asarray(arr, dtype=np.uint16)
        return cls(arr.astype(np.float32) / np.float32(65535.0))

    def to_uint8(self) -> np.ndarray:
        return np.rint(self.data.astype(np.float64) * 255.0).astype(np.uint8)

    def to_uint16(self) -> np.ndarray:
        return np.rint(self.data.astype(np.float64) * 65535.0).astype(np.uint16)

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> "FrameBuffer":
        if not (0 <= x0 < x1 <= self.width and 0 <= y0 < y1 <= self.height):
            raise ValueError(f"crop ({x0},{y0},{x1},{y1}) outside {self.width}x{self.height}")
        return FrameBuffer(self.data[y0:y1, x0:x1])

    def same_shape(self, other: "FrameBuffer") -> bool:
        return self.data.shape == other.data.shape


class VideoClip:
    """An ordered, non-empty sequence of same-sized frames."""

    __slots__ = ("frames", "fps")

    def __init__(self, frames: Iterable[FrameBuffer], fps: float | None = None):
        frames = tuple(frames)
        if not frames:
            raise ValueError("a clip needs at least one frame")
        shape = frames[0].data.shape
        for i, f in enumerate(frames):
            if f.data.shape != shape:
                raise ValueError(f"frame {i} has shape {f.data.shape}, expected {shape}")
        self.frames = frames
        self.fps = fps

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, idx: int) -> FrameBuffer:
        return self.frames[idx]

    def __iter__(self):
        return iter(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def channels(self) -> int:
        return self.frames[0].channels


class DisparityMap:
    """Per-pixel signed horizontal offset in pixels: target_x = x + d."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"disparity must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("disparity values must be finite")
        self.values = _readonly(arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> "DisparityMap":
        return DisparityMap(self.values[y0:y1, x0:x1])


class OcclusionMask:
    """Per-pixel boolean map; True marks a disoccluded hole needing inpainting."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        arr = np.asarray(values)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        self.values = _readonly(arr.astype(bool))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def empty(cls, height: int, width: int) -> "OcclusionMask":
        return cls(np.zeros((height, width), dtype=bool))

    def any(self) -> bool:
        return bool(self.values.any())

    def hole_fraction(self) -> float:
        return float(self.values.mean())

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> "OcclusionMask":
        return OcclusionMask(self.values[y0:y1, x0:x1])


@dataclass(frozen=True)
class StereoParams:
    """How normalized inverse depth is scaled to pixel disparity.

    max_disparity_px sets the full parallax budget; convergence picks the
    inverse-depth value that maps to zero disparity (1.0 = nearest content
    sits on the screen plane and everything else recedes).
    """

    max_disparity_px: float
    convergence: float = 1.0
    direction: str = LEFT_TO_RIGHT

    def __post_init__(self) -> None:
        if not (self.max_disparity_px > 0):
            raise ValueError("max_disparity_px must be > 0")
        if not (0.0 <= self.convergence <= 1.0):
            raise ValueError("convergence must be in [0, 1]")
        if self.direction not in (LEFT_TO_RIGHT, RIGHT_TO_LEFT):
            raise ValueError(f"unknown direction {self.direction!r}")


def _check_same_shape(a: FrameBuffer, b: FrameBuffer) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"frame shapes differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: FrameBuffer, b: FrameBuffer, valid: np.ndarray | OcclusionMask | None = None) -> float:
    """Peak signal-to-noise ratio in dB with MAX=1.0.

    ``valid``, when given, selects the pixels to score (True = counted);
    it is the complement of an occlusion mask. MSE pools all channels of
    the selected pixels. Returns the 99.0 dB cap when the MSE is zero.
    """
    _check_same_shape(a, b)
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    sq = diff * diff
    if valid is None:
        mse = float(sq.mean())
    else:
        sel = valid.values if isinstance(valid, OcclusionMask) else np.asarray(valid, dtype=bool)
        if sel.shape != a.data.shape[:2]:
            raise ValueError(f"valid mask shape {sel.shape} does not match frame {a.data.shape[:2]}")
        n = int(sel.sum())
        if n == 0:
            raise ValueError("no valid pixels to score")
        mse = float(sq[sel].sum() / (n * a.channels))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(1.0 / mse)


def pooled_psnr(
    pairs: Sequence[tuple[FrameBuffer, FrameBuffer]],
    valids: Sequence[np.ndarray | OcclusionMask | None] | None = None,
) -> float:
    """PSNR from a single MSE pooled over many frame pairs.

    Used by the dataset filter so nearly-hole-free frames cannot dominate a
    per-frame average.
    """
    if not pairs:
        raise ValueError("no frame pairs to score")
    total = 0.0
    count = 0
    for i, (a, b) in enumerate(pairs):
        _check_same_shape(a, b)
        diff = a.data.astype(np.float64) - b.data.astype(np.float64)
        sq = diff * diff
        sel = None if valids is None else valids[i]
        if sel is None:
            total += float(sq.sum())
            count += sq.size
        else:
            sel = sel.values if isinstance(sel, OcclusionMask) else np.asarray(sel, dtype=bool)
            if sel.shape != a.data.shape[:2]:
                raise ValueError(f"valid mask shape {sel.shape} does not match frame {a.data.shape[:2]}")
            total += float(sq[sel].sum())
            count += int(sel.sum()) * a.channels
    if count == 0:
        raise ValueError("no valid pixels to score")
    mse = total / count
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(1.0 / mse)
