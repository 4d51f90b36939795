"""Inpainting backends: the chunk contract, a pull-push fallback, and the
external-backend client.

The real hole filler is expected to be a learned video model reached over the
wire protocol; ``PullPushBackend`` gives a deterministic classical stand-in so
the scheduler and dataset paths can run self-contained.
"""

from __future__ import annotations

import math
import re
import shlex
import socket
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import wire
from .model import FrameBuffer, OcclusionMask

DEFAULT_CHUNK_CAPACITY = 25

_HOST_PORT_RE = re.compile(r"^(?P<host>[^\s:]+):(?P<port>\d+)$")


@dataclass(frozen=True)
class InpaintChunk:
    """A temporal window of work for a backend.

    The first ``context_count`` frames are already final output from the
    previous round; they carry no holes and must pass through unchanged.
    """

    frames: tuple[FrameBuffer, ...]
    masks: tuple[OcclusionMask, ...]
    context_count: int = 0

    def __init__(self, frames: Sequence[FrameBuffer], masks: Sequence[OcclusionMask],
                 context_count: int = 0):
        frames = tuple(frames)
        masks = tuple(masks)
        if not frames:
            raise ValueError("chunk needs at least one frame")
        if len(frames) != len(masks):
            raise ValueError(f"{len(frames)} frames but {len(masks)} masks")
        shape = frames[0].data.shape
        for i, (f, m) in enumerate(zip(frames, masks)):
            if f.data.shape != shape:
                raise ValueError(f"frame {i} has shape {f.data.shape}, expected {shape}")
            if (m.height, m.width) != shape[:2]:
                raise ValueError(f"mask {i} is {m.height}x{m.width}, frames are {shape[0]}x{shape[1]}")
        if not (0 <= context_count <= len(frames)):
            raise ValueError(f"context_count {context_count} outside [0, {len(frames)}]")
        for i in range(context_count):
            if masks[i].any():
                raise ValueError(f"context frame {i} has a non-empty mask")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "context_count", context_count)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str = "null"  # null | pullpush | external
    capacity: int = DEFAULT_CHUNK_CAPACITY
    transport: str | None = None  # external only: subprocess command or host:port

    def __post_init__(self) -> None:
        if self.kind not in ("null", "pullpush", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.kind == "external" and not self.transport:
            raise ValueError("external backend needs a transport (command or host:port)")


def inpaint_pullpush(
    frame: FrameBuffer,
    mask: OcclusionMask,
    priority: np.ndarray | None = None,
) -> FrameBuffer:
    """Fill masked holes with a coverage-weighted pull-push pyramid.

    Valid pixels survive bit-exact; holes receive convex combinations of
    valid values propagated coarse-to-fine. ``priority``, when given, biases
    the pull weights by (1 - normalized priority) so holes prefer far
    content (weights are floored at 1e-6 to keep every valid pixel alive).
    """
    if (mask.height, mask.width) != (frame.height, frame.width):
        raise ValueError(f"mask {mask.height}x{mask.width} does not match frame {frame.height}x{frame.width}")
    hole = mask.values
    if not hole.any():
        return frame
    valid = ~hole
    if not valid.any():
        raise ValueError("nothing to propagate")

    weights = valid.astype(np.float64)
    if priority is not None:
        prio = np.asarray(priority, dtype=np.float64)
        if prio.shape != hole.shape:
            raise ValueError(f"priority shape {prio.shape} does not match frame")
        lo, hi = float(prio.min()), float(prio.max())
        if hi > lo:
            weights = weights * np.maximum(1.0 - (prio - lo) / (hi - lo), 1e-6)

    values = frame.data.astype(np.float64) * weights[:, :, None]
    levels = [(values, weights)]
    n_levels = max(1, math.ceil(math.log2(max(frame.height, frame.width))))
    for _ in range(n_levels):
        v, w = levels[-1]
        levels.append(_pull(v, w))

    # Push: replace zero-coverage pixels with the coarser level's value.
    v_top, w_top = levels[-1]
    filled = np.divide(v_top, w_top[:, :, None], out=np.zeros_like(v_top),
                       where=w_top[:, :, None] > 0)
    for v, w in reversed(levels[:-1]):
        up = np.repeat(np.repeat(filled, 2, axis=0), 2, axis=1)[: v.shape[0], : v.shape[1]]
        filled = np.divide(v, w[:, :, None], out=up, where=w[:, :, None] > 0)

    out = frame.data.copy()
    out[hole] = filled[hole].astype(np.float32)
    return FrameBuffer(out)


def _pull(values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h, w = weights.shape
    ph, pw = (h + 1) // 2 * 2, (w + 1) // 2 * 2
    if (ph, pw) != (h, w):
        values = np.pad(values, ((0, ph - h), (0, pw - w), (0, 0)))
        weights = np.pad(weights, ((0, ph - h), (0, pw - w)))
    v = values.reshape(ph // 2, 2, pw // 2, 2, -1).sum(axis=(1, 3))
    w2 = weights.reshape(ph // 2, 2, pw // 2, 2).sum(axis=(1, 3))
    return v, w2


class NullBackend:
    """Identity backend: echoes its input frames."""

    def __init__(self, capacity: int = DEFAULT_CHUNK_CAPACITY):
        self.capacity = capacity

    def inpaint(self, chunk: InpaintChunk) -> list[FrameBuffer]:
        _check_capacity(self, chunk)
        return list(chunk.frames)

    def close(self) -> None:
        pass


class PullPushBackend:
    """Per-frame deterministic classical fill; no temporal model."""

    def __init__(self, capacity: int = DEFAULT_CHUNK_CAPACITY):
        self.capacity = capacity

    def inpaint(self, chunk: InpaintChunk) -> list[FrameBuffer]:
        _check_capacity(self, chunk)
        return [inpaint_pullpush(f, m) for f, m in zip(chunk.frames, chunk.masks)]

    def close(self) -> None:
        pass


class ExternalBackend:
    """Protocol v1 client session over subprocess stdio or TCP.

    One request in flight per session; open several sessions for parallelism.
    """

    def __init__(self, transport: str, capacity: int = DEFAULT_CHUNK_CAPACITY):
        self.capacity = capacity
        self.transport = transport
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        self._next_id = 1
        m = _HOST_PORT_RE.match(transport.strip())
        try:
            if m:
                self._sock = socket.create_connection((m.group("host"), int(m.group("port"))))
                self._rfile = self._sock.makefile("rb")
                self._wfile = self._sock.makefile("wb")
            else:
                self._proc = subprocess.Popen(
                    shlex.split(transport), stdin=subprocess.PIPE, stdout=subprocess.PIPE
                )
                self._rfile = self._proc.stdout
                self._wfile = self._proc.stdin
        except OSError as exc:
            raise wire.TransportError(f"cannot reach backend {transport!r}: {exc}") from exc

    def inpaint(self, chunk: InpaintChunk) -> list[FrameBuffer]:
        _check_capacity(self, chunk)
        request_id = self._next_id
        self._next_id += 1
        try:
            self._wfile.write(wire.encode_request(chunk, request_id))
            self._wfile.flush()
            frames = wire.decode_response(self._rfile)
        except (BrokenPipeError, ConnectionError, OSError) as exc:
            raise wire.TransportError(f"backend {self.transport!r} failed: {exc}") from exc
        if len(frames) != len(chunk):
            raise wire.ProtocolError(
                f"backend returned {len(frames)} frames for a {len(chunk)}-frame chunk"
            )
        if frames and frames[0].data.shape != chunk.frames[0].data.shape:
            raise wire.ProtocolError(
                f"backend returned shape {frames[0].data.shape}, expected {chunk.frames[0].data.shape}"
            )
        # Context frames are already final; never trust a regenerated copy.
        for i in range(chunk.context_count):
            frames[i] = chunk.frames[i]
        return frames

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.wait(timeout=10)
            self._proc = None
        if self._sock is not None:
            self._rfile.close()
            self._wfile.close()
            self._sock.close()
            self._sock = None

    def __enter__(self) -> "ExternalBackend":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def create_backend(desc: BackendDescriptor):
    if desc.kind == "null":
        return NullBackend(desc.capacity)
    if desc.kind == "pullpush":
        return PullPushBackend(desc.capacity)
    return ExternalBackend(desc.transport, desc.capacity)


def _check_capacity(backend, chunk: InpaintChunk) -> None:
    if len(chunk) > backend.capacity:
        raise ValueError(f"chunk of {len(chunk)} frames exceeds backend capacity {backend.capacity}")


def inpaint_chunk(backend, chunk: InpaintChunk) -> list[FrameBuffer]:
    """Run one chunk through a backend (descriptor or live backend object).

    Context frames come back bit-exact; null/pullpush backends additionally
    preserve all non-hole pixels.
    """
    if isinstance(backend, BackendDescriptor):
        session = create_backend(backend)
        try:
            return session.inpaint(chunk)
        finally:
            session.close()
    return backend.inpaint(chunk)
