"""Temporal autoregressive chunking and spatial tiled processing.

Long clips are split into capacity-sized windows that re-feed the last frames
of the previous round as fixed context; large frames are split into
overlapping tiles processed independently and feather-blended back together.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .inpaint import BackendDescriptor, ExternalBackend, InpaintChunk, create_backend
from .model import FrameBuffer, OcclusionMask, VideoClip

DEFAULT_CHUNK_OVERLAP = 3


@dataclass(frozen=True)
class ChunkEntry:
    start: int
    end: int  # exclusive
    context_count: int


@dataclass(frozen=True)
class ChunkPlan:
    total: int
    entries: tuple[ChunkEntry, ...]


@dataclass(frozen=True)
class TileRect:
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


@dataclass(frozen=True)
class TilePlan:
    height: int
    width: int
    tiles: tuple[TileRect, ...]  # row-major over (y, x)
    x_spans: tuple[tuple[int, int], ...]
    y_spans: tuple[tuple[int, int], ...]
    x_overlaps: tuple[int, ...]  # per adjacent column pair
    y_overlaps: tuple[int, ...]


def plan_chunks(total: int, capacity: int = 25, overlap: int = DEFAULT_CHUNK_OVERLAP) -> ChunkPlan:
    """Plan autoregressive windows over ``total`` frames.

    Every window after the first starts ``overlap`` frames before the
    previous end and treats those frames as context. A short tail window is
    shifted earlier (growing its context) so it still ends exactly at
    ``total`` with a natural-length input.
    """
    if total < 1:
        raise ValueError("total must be >= 1")
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if not (0 <= overlap < capacity):
        raise ValueError(f"overlap {overlap} must satisfy 0 <= overlap < capacity {capacity}")
    entries: list[ChunkEntry] = []
    if total <= capacity:
        return ChunkPlan(total, (ChunkEntry(0, total, 0),))
    end = capacity
    entries.append(ChunkEntry(0, end, 0))
    while end < total:
        start = end - overlap
        if start + capacity >= total:
            start = total - capacity
        new_end = min(start + capacity, total)
        entries.append(ChunkEntry(start, new_end, end - start))
        end = new_end
    return ChunkPlan(total, tuple(entries))


def run_autoregressive(
    backend,
    warped: VideoClip,
    masks: Sequence[OcclusionMask],
    plan: ChunkPlan,
) -> VideoClip:
    """Execute a chunk plan in order, feeding earlier output back as context.

    Context positions keep the frames already produced; only the new
    positions of each window enter the final clip.
    """
    if plan.total != len(warped):
        raise ValueError(f"plan covers {plan.total} frames, clip has {len(warped)}")
    if len(masks) != len(warped):
        raise ValueError(f"{len(warped)} frames but {len(masks)} masks")
    if isinstance(backend, BackendDescriptor):
        session = create_backend(backend)
        try:
            return run_autoregressive(session, warped, masks, plan)
        finally:
            session.close()

    output: list[FrameBuffer] = []
    empty = OcclusionMask.empty(warped.height, warped.width)
    for k, entry in enumerate(plan.entries):
        ctx = entry.context_count
        frames = output[entry.start : entry.start + ctx] + list(warped.frames[entry.start + ctx : entry.end])
        chunk_masks = [empty] * ctx + list(masks[entry.start + ctx : entry.end])
        try:
            chunk = InpaintChunk(frames, chunk_masks, context_count=ctx)
            produced = backend.inpaint(chunk)
        except Exception as exc:
            raise RuntimeError(
                f"chunk {k} (frames [{entry.start},{entry.end})): {exc}"
            ) from exc
        if len(produced) != entry.end - entry.start:
            raise RuntimeError(
                f"chunk {k} (frames [{entry.start},{entry.end})): backend returned "
                f"{len(produced)} frames, expected {entry.end - entry.start}"
            )
        output.extend(produced[ctx:])
    return VideoClip(output, fps=warped.fps)


def _axis_starts(dim: int, tile: int, min_overlap: int) -> list[int]:
    if min_overlap >= tile:
        raise ValueError(f"min_overlap {min_overlap} must be smaller than the tile dimension {tile}")
    if dim <= tile:
        return [0]
    span = dim - tile
    n = math.ceil(span / (tile - min_overlap)) + 1
    return [round(i * span / (n - 1)) for i in range(n)]


def plan_tiles(height: int, width: int, tile_h: int, tile_w: int, min_overlap: int = 0) -> TilePlan:
    """Plan an overlapping tile grid covering a height x width frame.

    Per axis, tile starts are evenly spaced so adjacent tiles overlap by at
    least ``min_overlap`` pixels; a tile larger than the frame clamps to a
    single full-frame tile on that axis.
    """
    if height < 1 or width < 1 or tile_h < 1 or tile_w < 1:
        raise ValueError("dimensions must be >= 1")
    if min_overlap < 0:
        raise ValueError("min_overlap must be >= 0")
    xs = _axis_starts(width, tile_w, min_overlap)
    ys = _axis_starts(height, tile_h, min_overlap)
    x_spans = tuple((x, min(x + tile_w, width)) for x in xs)
    y_spans = tuple((y, min(y + tile_h, height)) for y in ys)
    tiles = tuple(
        TileRect(x0, y0, x1, y1) for (y0, y1) in y_spans for (x0, x1) in x_spans
    )
    x_overlaps = tuple(x_spans[i][1] - x_spans[i + 1][0] for i in range(len(x_spans) - 1))
    y_overlaps = tuple(y_spans[i][1] - y_spans[i + 1][0] for i in range(len(y_spans) - 1))
    return TilePlan(height, width, tiles, x_spans, y_spans, x_overlaps, y_overlaps)


def _ramp(overlap: int) -> np.ndarray:
    if overlap == 1:
        return np.array([0.5], dtype=np.float64)
    return np.arange(overlap, dtype=np.float64) / float(overlap - 1)


def _blend_axis(parts: list[np.ndarray], spans: Sequence[tuple[int, int]], axis: int) -> np.ndarray:
    """Chain-blend overlapping segments along one axis (float64 in/out)."""
    first = parts[0]
    out_shape = list(first.shape)
    out_shape[axis] = spans[-1][1] - spans[0][0]
    out = np.zeros(out_shape, dtype=np.float64)

    def seg(arr: np.ndarray, lo: int, hi: int) -> np.ndarray:
        idx = [slice(None)] * arr.ndim
        idx[axis] = slice(lo, hi)
        return arr[tuple(idx)]

    seg(out, spans[0][0], spans[0][1])[...] = first
    cur_end = spans[0][1]
    for part, (lo, hi) in zip(parts[1:], spans[1:]):
        o = cur_end - lo
        if o > 0:
            w = _ramp(o)
            w_shape = [1] * out.ndim
            w_shape[axis] = o
            w = w.reshape(w_shape)
            old = seg(out, lo, cur_end)
            old[...] = (1.0 - w) * old + w * seg(part, 0, o)
        seg(out, cur_end, hi)[...] = seg(part, o, hi - lo)
        cur_end = hi
    return out


def blend_tiles(tile_outputs: Sequence[FrameBuffer], plan: TilePlan) -> FrameBuffer:
    """Reassemble tile outputs into one frame with separable feathering.

    Horizontally adjacent tiles mix across their overlap with a linear ramp
    hitting exactly 0 and 1 at the borders (left weight falls, right weight
    rises); rows of tiles then blend vertically the same way.
    """
    if len(tile_outputs) != len(plan.tiles):
        raise ValueError(f"{len(tile_outputs)} tile outputs for {len(plan.tiles)} planned tiles")
    for out, rect in zip(tile_outputs, plan.tiles):
        if (out.height, out.width) != (rect.height, rect.width):
            raise ValueError(
                f"tile output {out.height}x{out.width} does not match planned {rect.height}x{rect.width}"
            )
    ncols = len(plan.x_spans)
    strips = []
    for row in range(len(plan.y_spans)):
        row_parts = [
            tile_outputs[row * ncols + col].data.astype(np.float64) for col in range(ncols)
        ]
        strips.append(_blend_axis(row_parts, plan.x_spans, axis=1))
    full = _blend_axis(strips, plan.y_spans, axis=0)
    return FrameBuffer(full.astype(np.float32))


def run_tiled(
    backend,
    warped: VideoClip,
    masks: Sequence[OcclusionMask],
    chunk_plan: ChunkPlan,
    tile_plan: TilePlan,
    workers: int = 1,
) -> VideoClip:
    """Process every tile's sub-video autoregressively, then blend per frame.

    With a single full-frame tile this is exactly ``run_autoregressive``.
    Tiles are independent; in-process backends may run them concurrently.
    An external backend is a single serial session, so tiles run in order.
    """
    if (tile_plan.height, tile_plan.width) != (warped.height, warped.width):
        raise ValueError(
            f"tile plan is {tile_plan.height}x{tile_plan.width}, clip is {warped.height}x{warped.width}"
        )
    if isinstance(backend, BackendDescriptor):
        session = create_backend(backend)
        try:
            return run_tiled(session, warped, masks, chunk_plan, tile_plan, workers)
        finally:
            session.close()
    if len(tile_plan.tiles) == 1:
        return run_autoregressive(backend, warped, masks, chunk_plan)

    def run_one(idx: int) -> VideoClip:
        rect = tile_plan.tiles[idx]
        sub = VideoClip([f.crop(rect.x0, rect.y0, rect.x1, rect.y1) for f in warped], fps=warped.fps)
        sub_masks = [m.crop(rect.x0, rect.y0, rect.x1, rect.y1) for m in masks]
        try:
            return run_autoregressive(backend, sub, sub_masks, chunk_plan)
        except Exception as exc:
            raise RuntimeError(f"tile {idx} {rect}: {exc}") from exc

    indices = range(len(tile_plan.tiles))
    if workers > 1 and not isinstance(backend, ExternalBackend):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tile_clips = list(pool.map(run_one, indices))
    else:
        tile_clips = [run_one(i) for i in indices]

    frames = []
    for t in range(len(warped)):
        frames.append(blend_tiles([clip[t] for clip in tile_clips], tile_plan))
    return VideoClip(frames, fps=warped.fps)
