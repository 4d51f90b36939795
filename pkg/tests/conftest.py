"""Shared test helpers: brute-force splat oracle and synthetic scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pytest

from stereopipe import DisparityMap, FrameBuffer


def reference_splat(
    frame: np.ndarray,
    disp: np.ndarray,
    priority: np.ndarray | None = None,
    tau: float = 1e-3,
    exponent_floor: float = -60.0,
    hole_fill: float = 0.0,
):
    """Brute-force forward splat: iterate source pixels, accumulate into
    target arrays in source order, then normalize. Pure Python loops,
    independent of the library's accumulation path."""
    h, w, c = frame.shape
    colors = frame.astype(np.float64)
    d = disp.astype(np.float64)
    p = -d if priority is None else np.asarray(priority, dtype=np.float64)
    pmax = float(p.max())
    csum = np.zeros((h, w, c), dtype=np.float64)
    wsum = np.zeros((h, w), dtype=np.float64)
    cov = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            tx = float(x) + float(d[y, x])
            x0 = math.floor(tx)
            f = tx - x0
            e = float(p[y, x]) - pmax
            if e < exponent_floor:
                e = exponent_floor
            ww = float(np.exp2(np.float64(0.5 * e)))
            for t, b in ((x0, 1.0 - f), (x0 + 1, f)):
                if 0 <= t < w:
                    bw = b * ww
                    cov[y, t] += b
                    wsum[y, t] += bw
                    for ch in range(c):
                        csum[y, t, ch] += bw * colors[y, x, ch]
    hole = cov < tau
    out = np.full((h, w, c), hole_fill, dtype=np.float64)
    nz = wsum > 0.0
    np.divide(csum, wsum[:, :, None], out=out, where=nz[:, :, None])
    out[hole] = hole_fill
    warped = np.clip(out.astype(np.float32), 0.0, 1.0)
    return warped, hole, cov


def random_instance(rng: np.random.Generator, max_dim: int = 32, disp_range: float = 8.0,
                    with_priority: bool = True):
    h = int(rng.integers(1, max_dim + 1))
    w = int(rng.integers(1, max_dim + 1))
    c = int(rng.choice([1, 3]))
    frame = rng.uniform(0.0, 1.0, (h, w, c)).astype(np.float32)
    disp = rng.uniform(-disp_range, disp_range, (h, w)).astype(np.float32)
    priority = rng.uniform(-20.0, 20.0, (h, w)) if with_priority else None
    return frame, disp, priority


@dataclass
class SquareScene:
    """64x64 background at d=-10 with a 16x16 square at d=0.

    Background priority (-d = 10) dominates square content (priority 0,
    weight 2**-5) wherever both land; every weight is a power of two so the
    expected composite is exact in float arithmetic.
    """

    left: FrameBuffer
    disparity: DisparityMap
    composite: FrameBuffer  # expected warped frame on non-hole pixels
    holes: np.ndarray  # expected occlusion mask
    square_rows: tuple[int, int]
    square_cols: tuple[int, int]
    band_cols: tuple[int, int]  # the square's disocclusion band


def square_scene(seed: int = 7, size: int = 64, square: int = 16, origin: int = 24,
                 shift: int = 10) -> SquareScene:
    rng = np.random.default_rng(seed)
    colors = rng.uniform(0.0, 1.0, (size, size, 3)).astype(np.float32)
    disp = np.full((size, size), -float(shift), dtype=np.float32)
    r0, r1 = origin, origin + square
    c0, c1 = origin, origin + square
    disp[r0:r1, c0:c1] = 0.0

    colors64 = colors.astype(np.float64)
    w_square = float(np.exp2(np.float64(-0.5 * shift)))  # priority gap = shift
    expected = np.zeros((size, size, 3), dtype=np.float64)
    holes = np.zeros((size, size), dtype=bool)
    for y in range(size):
        in_square_rows = r0 <= y < r1
        for t in range(size):
            src_bg = t + shift
            has_bg = src_bg < size and not (in_square_rows and c0 <= src_bg < c1)
            has_fg = in_square_rows and c0 <= t < c1
            if has_bg and has_fg:
                expected[y, t] = (w_square * colors64[y, t] + colors64[y, src_bg]) / (1.0 + w_square)
            elif has_bg:
                expected[y, t] = colors64[y, src_bg]
            elif has_fg:
                expected[y, t] = colors64[y, t]
            else:
                holes[y, t] = True
    return SquareScene(
        left=FrameBuffer(colors),
        disparity=DisparityMap(disp),
        composite=FrameBuffer(expected.astype(np.float32)),
        holes=holes,
        square_rows=(r0, r1),
        square_cols=(c0, c1),
        band_cols=(c0 - shift, c0),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
