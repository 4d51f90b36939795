"""Depth-aware forward splatting.

Each source pixel is pushed to its continuous target position along the
disparity map and distributed to the nearest grid pixels with bilinear
geometric weights. Collisions are resolved by blending with depth-aware
weights sqrt(2)**priority: nearer content (higher priority) dominates
exponentially. Target pixels whose geometric coverage stays below a
threshold are reported as disoccluded holes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from . import _kernels
from .model import DisparityMap, FrameBuffer, OcclusionMask, VideoClip

# Rows per accumulation block. Row partitioning never changes results (each
# target row only receives contributions from its own source row), so this is
# purely a scheduling granule.
_ROW_BLOCK = 64


@dataclass(frozen=True)
class SplatOptions:
    coverage_threshold: float = 1e-3
    exponent_floor: float = -60.0
    deterministic: bool = True
    hole_fill_value: float = 0.0
    mask_dilation_px: int = 0

    def __post_init__(self) -> None:
        if not (self.coverage_threshold >= 0.0):
            raise ValueError("coverage_threshold must be >= 0")
        if not (self.exponent_floor <= 0.0):
            raise ValueError("exponent_floor must be <= 0")
        if not (0.0 <= self.hole_fill_value <= 1.0):
            raise ValueError("hole_fill_value must be in [0, 1]")
        if self.mask_dilation_px < 0:
            raise ValueError("mask_dilation_px must be >= 0")


@dataclass(frozen=True)
class SplatResult:
    warped: FrameBuffer
    mask: OcclusionMask
    coverage: np.ndarray = field(repr=False)  # (H, W) float64 sum of geometric weights


def splat_weight(priority: float, priority_max: float, exponent_floor: float = -60.0) -> float:
    """Blend weight sqrt(2)**(priority - priority_max), exponent floored.

    Subtracting the frame maximum keeps the exponent non-positive so wide
    priority ranges cannot overflow; blending is a ratio of these weights, so
    the shift cancels out.
    """
    e = priority - priority_max
    if e < exponent_floor:
        e = exponent_floor
    # 2**(e/2) == sqrt(2)**e, but hits exact powers of two for even exponents.
    return float(np.exp2(np.float64(0.5 * e)))


def _weights(priority_block: np.ndarray, priority_max: float, exponent_floor: float) -> np.ndarray:
    e = np.maximum(priority_block - priority_max, exponent_floor)
    return np.exp2(0.5 * e)


def _splat_row_block(
    colors64: np.ndarray,
    disp64: np.ndarray,
    prio64: np.ndarray,
    priority_max: float,
    opts: SplatOptions,
    xs: np.ndarray,
    csum: np.ndarray,
    wsum: np.ndarray,
    cov: np.ndarray,
    out32: np.ndarray,
    hole: np.ndarray,
    r0: int,
    r1: int,
) -> None:
    # Rows never influence each other with horizontal offsets, so this block
    # both accumulates and normalizes its own rows.
    w = _weights(prio64[r0:r1], priority_max, opts.exponent_floor)
    tx = xs[None, :] + disp64[r0:r1]
    _kernels.splat_rows(tx, w, colors64[r0:r1], csum[r0:r1], wsum[r0:r1], cov[r0:r1])
    _kernels.normalize_rows(
        csum[r0:r1], wsum[r0:r1], cov[r0:r1],
        opts.coverage_threshold, opts.hole_fill_value, out32[r0:r1], hole[r0:r1],
    )


def forward_splat_frame(
    frame: FrameBuffer,
    disparity: DisparityMap,
    priority: np.ndarray | None = None,
    opts: SplatOptions = SplatOptions(),
    vertical_offset: np.ndarray | None = None,
    workers: int = 1,
) -> SplatResult:
    """Warp one frame along its disparity map.

    ``priority`` defaults to ``-disparity`` (nearer content wins collisions
    under the convention that synthesis pushes near content to more negative
    offsets). ``vertical_offset`` optionally adds a per-pixel y displacement,
    switching to four-neighbor splatting.
    """
    h, w_dim = frame.height, frame.width
    if (disparity.height, disparity.width) != (h, w_dim):
        raise ValueError(
            f"disparity {disparity.height}x{disparity.width} does not match frame {h}x{w_dim}"
        )
    disp64 = disparity.values.astype(np.float64)
    if priority is None:
        prio64 = -disp64
    else:
        prio64 = np.asarray(priority, dtype=np.float64)
        if prio64.shape != (h, w_dim):
            raise ValueError(f"priority shape {prio64.shape} does not match frame {h}x{w_dim}")
        if not np.isfinite(prio64).all():
            raise ValueError("priority values must be finite")
    vert64 = None
    if vertical_offset is not None:
        vert64 = np.asarray(vertical_offset, dtype=np.float64)
        if vert64.shape != (h, w_dim):
            raise ValueError(f"vertical_offset shape {vert64.shape} does not match frame {h}x{w_dim}")
        if not np.isfinite(vert64).all():
            raise ValueError("vertical_offset values must be finite")

    colors64 = frame.data.astype(np.float64)
    priority_max = float(prio64.max())
    csum = np.zeros((h, w_dim, frame.channels), dtype=np.float64)
    wsum = np.zeros((h, w_dim), dtype=np.float64)
    cov = np.zeros((h, w_dim), dtype=np.float64)
    out32 = np.empty((h, w_dim, frame.channels), dtype=np.float32)
    hole = np.empty((h, w_dim), dtype=bool)
    xs = np.arange(w_dim, dtype=np.float64)

    if vert64 is not None:
        # 2-D offsets cross row boundaries; accumulate the whole frame in one
        # ordered pass to stay deterministic, then normalize.
        w = _weights(prio64, priority_max, opts.exponent_floor)
        tx = xs[None, :] + disp64
        ty = np.arange(h, dtype=np.float64)[:, None] + vert64
        _kernels.splat_2d(tx, ty, w, colors64, csum, wsum, cov)
        _kernels.normalize_rows(csum, wsum, cov, opts.coverage_threshold,
                                opts.hole_fill_value, out32, hole)
    else:
        blocks = [(r0, min(r0 + _ROW_BLOCK, h)) for r0 in range(0, h, _ROW_BLOCK)]
        args = (colors64, disp64, prio64, priority_max, opts, xs, csum, wsum, cov, out32, hole)
        if workers > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_splat_row_block, *args, r0, r1) for r0, r1 in blocks]
                for fut in futures:
                    fut.result()
        else:
            for r0, r1 in blocks:
                _splat_row_block(*args, r0, r1)

    mask = hole
    if opts.mask_dilation_px > 0:
        mask = scipy.ndimage.binary_dilation(hole, iterations=opts.mask_dilation_px)
    return SplatResult(
        warped=FrameBuffer._trusted(out32),
        mask=OcclusionMask(mask),
        coverage=cov,
    )


def forward_splat_clip(
    clip: VideoClip,
    disparities: list[DisparityMap] | tuple[DisparityMap, ...],
    opts: SplatOptions = SplatOptions(),
    workers: int = 1,
) -> list[SplatResult]:
    """Splat every frame of a clip with its own disparity map.

    Frames are independent; with ``workers > 1`` they are processed in a
    thread pool. Results are ordered by frame index either way.
    """
    if len(disparities) != len(clip):
        raise ValueError(f"{len(clip)} frames but {len(disparities)} disparity maps")
    for i, d in enumerate(disparities):
        if (d.height, d.width) != (clip.height, clip.width):
            raise ValueError(f"disparity {i} is {d.height}x{d.width}, clip is {clip.height}x{clip.width}")
    if workers > 1 and len(clip) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda pair: forward_splat_frame(pair[0], pair[1], None, opts),
                                 zip(clip.frames, disparities)))
    return [forward_splat_frame(f, d, None, opts) for f, d in zip(clip.frames, disparities)]
