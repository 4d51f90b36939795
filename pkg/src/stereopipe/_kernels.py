"""Numba kernels for forward splatting.

The kernels only add, multiply, divide, and floor float64 values in
source-pixel order; blend weights are computed by the caller. Keeping
transcendentals out of the compiled code makes the results bit-identical to
a straightforward per-pixel Python loop doing the same arithmetic, which is
what the splat oracle tests rely on. Bounds checks stay in the float domain
so absurd disparities cannot overflow the integer cast.
"""

from __future__ import annotations

import math

import numba


@numba.njit(cache=True, nogil=True)
def splat_rows(tx, w, colors, csum, wsum, cov):
    # Horizontal-only offsets: each target row depends on the same source row,
    # so any row partition of a frame accumulates in the same per-target order.
    rows, width = tx.shape
    channels = colors.shape[2]
    for r in range(rows):
        for x in range(width):
            pos = tx[r, x]
            x0 = math.floor(pos)
            f = pos - x0
            ww = w[r, x]
            if 0.0 <= x0 < width:
                t = int(x0)
                b = 1.0 - f
                bw = b * ww
                cov[r, t] += b
                wsum[r, t] += bw
                for c in range(channels):
                    csum[r, t, c] += bw * colors[r, x, c]
            x1 = x0 + 1.0
            if 0.0 <= x1 < width:
                t = int(x1)
                bw = f * ww
                cov[r, t] += f
                wsum[r, t] += bw
                for c in range(channels):
                    csum[r, t, c] += bw * colors[r, x, c]


@numba.njit(cache=True, nogil=True)
def splat_2d(tx, ty, w, colors, csum, wsum, cov):
    # Four-neighbor variant for the optional vertical-offset extension.
    # Contribution order per source pixel: nw, ne, sw, se.
    height, width = cov.shape
    rows, cols = tx.shape
    channels = colors.shape[2]
    for r in range(rows):
        for x in range(cols):
            posx = tx[r, x]
            posy = ty[r, x]
            x0 = math.floor(posx)
            y0 = math.floor(posy)
            fx = posx - x0
            fy = posy - y0
            ww = w[r, x]
            for dy in range(2):
                yf = y0 + dy
                if not (0.0 <= yf < height):
                    continue
                yy = int(yf)
                by = fy if dy == 1 else 1.0 - fy
                for dx in range(2):
                    xf = x0 + dx
                    if not (0.0 <= xf < width):
                        continue
                    xx = int(xf)
                    bx = fx if dx == 1 else 1.0 - fx
                    b = by * bx
                    bw = b * ww
                    cov[yy, xx] += b
                    wsum[yy, xx] += bw
                    for c in range(channels):
                        csum[yy, xx, c] += bw * colors[r, x, c]


@numba.njit(cache=True, nogil=True)
def normalize_rows(csum, wsum, cov, tau, fill, out, hole):
    # out is float32; stores round-to-nearest exactly like ndarray.astype.
    rows, width, channels = csum.shape
    for r in range(rows):
        for x in range(width):
            if cov[r, x] < tau:
                hole[r, x] = True
                for c in range(channels):
                    out[r, x, c] = fill
            else:
                hole[r, x] = False
                ws = wsum[r, x]
                if ws > 0.0:
                    for c in range(channels):
                        v = csum[r, x, c] / ws
                        if v < 0.0:
                            v = 0.0
                        elif v > 1.0:
                            v = 1.0
                        out[r, x, c] = v
                else:
                    for c in range(channels):
                        out[r, x, c] = fill
