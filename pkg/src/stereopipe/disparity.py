"""Depth-to-disparity conversion, disparity statistics, and parallax alignment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import LEFT_TO_RIGHT, DisparityMap, StereoParams, VideoClip


class DepthMap:
    """Normalized inverse depth r in [0, 1]; 1 = nearest."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"depth must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("depth values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("depth values must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.values = arr

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class AlignmentReport:
    shift_px: int
    cropped_width: int
    original_max_disparity: float
    aligned_max_disparity: float


def depth_to_disparity(depth: DepthMap, params: StereoParams) -> DisparityMap:
    """Map inverse depth to signed pixel disparity (target_x = x + d).

    For left-to-right synthesis d = g * (r - c): content at the convergence
    inverse-depth c stays put and everything else shifts left, giving
    d in [-g, 0] at the default c = 1. right_to_left mirrors the sign.
    """
    r = depth.values.astype(np.float64)
    g = params.max_disparity_px
    c = params.convergence
    if params.direction == LEFT_TO_RIGHT:
        d = g * (r - c)
    else:
        d = g * (c - r)
    return DisparityMap(d.astype(np.float32))


def disparity_stats(disp: DisparityMap | Sequence[DisparityMap]) -> dict[str, float]:
    """Exact min/max and mean over all pixels (and all maps of a clip)."""
    maps = [disp] if isinstance(disp, DisparityMap) else list(disp)
    if not maps:
        raise ValueError("no disparity maps to summarize")
    lo = min(float(m.values.min()) for m in maps)
    hi = max(float(m.values.max()) for m in maps)
    total = sum(float(m.values.astype(np.float64).sum()) for m in maps)
    count = sum(m.values.size for m in maps)
    return {"min": lo, "max": hi, "mean": total / count}


def parallax_align(
    left: VideoClip,
    right: VideoClip,
    disp: Sequence[DisparityMap],
    margin: float = 0.0,
) -> tuple[VideoClip, VideoClip, list[DisparityMap], AlignmentReport]:
    """Shift/crop a stereo pair so every disparity becomes non-positive.

    Uses the x_right = x_left + d convention: the right view loses its first
    ``s`` columns and the left view its last ``s``, where
    s = ceil(max(d) + margin) clamped to >= 0. The surviving correspondences
    satisfy x_right' = x_left' + (d - s), so the aligned maximum lies in
    (-1 - margin, 0].
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if len(left) != len(right) or len(left) != len(disp):
        raise ValueError(
            f"clip/disparity counts differ: left={len(left)} right={len(right)} disp={len(disp)}"
        )
    if (left.height, left.width) != (right.height, right.width):
        raise ValueError("left and right clips must share dimensions")
    for i, d in enumerate(disp):
        if (d.height, d.width) != (left.height, left.width):
            raise ValueError(f"disparity {i} is {d.height}x{d.width}, clips are {left.height}x{left.width}")

    original_max = disparity_stats(list(disp))["max"]
    s = max(0, math.ceil(original_max + margin))
    w = left.width
    if s >= w:
        raise ValueError("disparity range exceeds frame width")
    if s == 0:
        report = AlignmentReport(0, w, original_max, original_max)
        return left, right, list(disp), report

    left_out = VideoClip([f.crop(0, 0, w - s, f.height) for f in left], fps=left.fps)
    right_out = VideoClip([f.crop(s, 0, w, f.height) for f in right], fps=right.fps)
    disp_out = [DisparityMap(d.values[:, : w - s] - np.float32(s)) for d in disp]
    aligned_max = disparity_stats(disp_out)["max"]
    report = AlignmentReport(s, w - s, original_max, aligned_max)
    return left_out, right_out, disp_out, report
