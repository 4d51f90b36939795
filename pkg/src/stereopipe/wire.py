"""Wire protocol (v1) for external inpainting backends.

A request or response is one UTF-8 JSON header line terminated by ``\\n``
followed by a raw binary payload:

    request  {"v":1,"type":"inpaint","id":N,"frames":F,"height":H,"width":W,
              "channels":C,"context":n}
             + F*H*W*C float32-LE frame payload + F*H*W mask bytes {0,1}
    response {"v":1,"type":"result","id":N,"frames":F,"height":H,"width":W,
              "channels":C} + F*H*W*C float32-LE payload
    error    {"v":1,"type":"error","id":N,"message":"..."}

Frame payloads are planar and frame-major: for each frame in order, its C
channel planes of H*W little-endian float32 values. Masks follow as one
H*W byte plane per frame, 1 = hole.
"""

from __future__ import annotations

import io
import json
from typing import BinaryIO, Sequence

import numpy as np

from .model import FrameBuffer, OcclusionMask

PROTOCOL_VERSION = 1
_MAX_HEADER_BYTES = 65536


class ProtocolError(Exception):
    """Malformed or incompatible protocol traffic."""


class BackendError(Exception):
    """The remote backend reported a failure."""


class TransportError(Exception):
    """The byte stream to the backend broke down."""


def _frames_payload(frames: Sequence[FrameBuffer]) -> bytes:
    parts = []
    for f in frames:
        planes = np.ascontiguousarray(f.data.transpose(2, 0, 1), dtype="<f4")
        parts.append(planes.tobytes())
    return b"".join(parts)


def _header_line(fields: dict) -> bytes:
    return (json.dumps(fields, separators=(",", ":")) + "\n").encode("utf-8")


def encode_request(chunk, request_id: int = 0) -> bytes:
    """Serialize an InpaintChunk into a protocol v1 request."""
    first = chunk.frames[0]
    header = _header_line(
        {
            "v": PROTOCOL_VERSION,
            "type": "inpaint",
            "id": int(request_id),
            "frames": len(chunk.frames),
            "height": first.height,
            "width": first.width,
            "channels": first.channels,
            "context": chunk.context_count,
        }
    )
    masks = b"".join(m.values.astype(np.uint8).tobytes() for m in chunk.masks)
    return header + _frames_payload(chunk.frames) + masks


def encode_response(frames: Sequence[FrameBuffer], request_id: int = 0) -> bytes:
    first = frames[0]
    header = _header_line(
        {
            "v": PROTOCOL_VERSION,
            "type": "result",
            "id": int(request_id),
            "frames": len(frames),
            "height": first.height,
            "width": first.width,
            "channels": first.channels,
        }
    )
    return header + _frames_payload(frames)


def encode_error(message: str, request_id: int = 0) -> bytes:
    return _header_line(
        {"v": PROTOCOL_VERSION, "type": "error", "id": int(request_id), "message": str(message)}
    )


def _read_header_line(stream: BinaryIO) -> bytes | None:
    line = stream.readline(_MAX_HEADER_BYTES)
    if not line:
        return None
    if not line.endswith(b"\n"):
        raise ProtocolError("header line too long or stream truncated")
    return line


def _parse_header(line: bytes, expected_type: str | None = None) -> dict:
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed header: {exc}") from exc
    if not isinstance(header, dict):
        raise ProtocolError("malformed header: not a JSON object")
    if header.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {header.get('v')!r}")
    kind = header.get("type")
    if expected_type is not None and kind != expected_type and kind != "error":
        raise ProtocolError(f"unexpected message type {kind!r}")
    return header


def _frame_geometry(header: dict) -> tuple[int, int, int, int]:
    try:
        f = int(header["frames"])
        h = int(header["height"])
        w = int(header["width"])
        c = int(header["channels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed header: missing geometry field ({exc})") from exc
    if f < 1 or h < 1 or w < 1 or c not in (1, 3):
        raise ProtocolError(f"invalid geometry frames={f} height={h} width={w} channels={c}")
    return f, h, w, c


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    buf = stream.read(n)
    if buf is None or len(buf) != n:
        got = 0 if buf is None else len(buf)
        raise ProtocolError(f"truncated {what}: expected {n} bytes, got {got}")
    return buf


def _decode_frames(stream: BinaryIO, f: int, h: int, w: int, c: int) -> list[FrameBuffer]:
    raw = _read_exact(stream, f * h * w * c * 4, "frame payload")
    planes = np.frombuffer(raw, dtype="<f4").reshape(f, c, h, w)
    out = []
    for i in range(f):
        arr = planes[i].transpose(1, 2, 0)
        if not np.isfinite(arr).all():
            raise ProtocolError("frame payload contains non-finite values")
        out.append(FrameBuffer(arr))
    return out


def decode_request(stream: BinaryIO | bytes):
    """Read one request; returns (chunk, request_id) or None at end of stream."""
    from .inpaint import InpaintChunk

    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    line = _read_header_line(stream)
    if line is None:
        return None
    header = _parse_header(line, expected_type="inpaint")
    if header.get("type") != "inpaint":
        raise ProtocolError(f"unexpected message type {header.get('type')!r}")
    f, h, w, c = _frame_geometry(header)
    context = header.get("context", 0)
    if not isinstance(context, int) or not (0 <= context <= f):
        raise ProtocolError(f"invalid context count {context!r}")
    frames = _decode_frames(stream, f, h, w, c)
    raw = _read_exact(stream, f * h * w, "mask payload")
    mask_planes = np.frombuffer(raw, dtype=np.uint8).reshape(f, h, w)
    masks = [OcclusionMask(mask_planes[i] != 0) for i in range(f)]
    try:
        chunk = InpaintChunk(frames=frames, masks=masks, context_count=context)
    except ValueError as exc:
        raise ProtocolError(f"invalid chunk: {exc}") from exc
    return chunk, int(header.get("id", 0))


def decode_response(stream: BinaryIO | bytes) -> list[FrameBuffer]:
    """Read one response; raises BackendError for an error message."""
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    line = _read_header_line(stream)
    if line is None:
        raise TransportError("backend closed the stream before responding")
    header = _parse_header(line, expected_type="result")
    if header.get("type") == "error":
        raise BackendError(str(header.get("message", "backend error")))
    f, h, w, c = _frame_geometry(header)
    return _decode_frames(stream, f, h, w, c)


def serve_stream(rfile: BinaryIO, wfile: BinaryIO, backend) -> None:
    """Answer requests on a byte stream until it closes.

    Malformed requests produce an error response; the loop (and process)
    keeps serving afterwards.
    """
    while True:
        try:
            decoded = decode_request(rfile)
        except ProtocolError as exc:
            wfile.write(encode_error(str(exc)))
            wfile.flush()
            continue
        if decoded is None:
            return
        chunk, request_id = decoded
        try:
            frames = backend.inpaint(chunk)
        except Exception as exc:  # backend failures must not kill the server
            wfile.write(encode_error(f"{type(exc).__name__}: {exc}", request_id))
            wfile.flush()
            continue
        wfile.write(encode_response(frames, request_id))
        wfile.flush()
