"""Frame-sequence, mask, and disparity-map I/O plus stereo frame packing.

Sequences are zero-indexed image files (PNG by default) rather than video
containers, keeping round-trips lossless within bit-depth quantization.
Disparity travels either as PFM or as 16-bit PNG with an affine sidecar.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import cv2
import numpy as np

from .model import DisparityMap, FrameBuffer, OcclusionMask, VideoClip

DISPARITY_SIDECAR = "meta.json"


@dataclass(frozen=True)
class SequenceSpec:
    directory: Path | str
    pattern: str = "%06d.png"
    bit_depth: int = 8

    def __post_init__(self) -> None:
        if self.bit_depth not in (8, 16):
            raise ValueError("bit_depth must be 8 or 16")
        if "%" not in self.pattern:
            raise ValueError(f"pattern {self.pattern!r} has no index placeholder")

    def path(self, index: int) -> Path:
        return Path(self.directory) / (self.pattern % index)


def _pattern_regex(pattern: str) -> re.Pattern:
    m = re.fullmatch(r"(.*)%0?(\d*)d(.*)", pattern)
    if m is None:
        raise ValueError(f"unsupported pattern {pattern!r}")
    return re.compile(re.escape(m.group(1)) + r"(\d+)" + re.escape(m.group(3)))


def _sequence_indices(directory: Path, pattern: str) -> list[int]:
    rx = _pattern_regex(pattern)
    indices = []
    for p in directory.iterdir():
        m = rx.fullmatch(p.name)
        if m:
            indices.append(int(m.group(1)))
    return sorted(indices)


def _require_contiguous(spec: SequenceSpec, indices: list[int]) -> None:
    if not indices:
        raise FileNotFoundError(f"no frames matching {spec.pattern!r} in {spec.directory}")
    expected = range(indices[-1] + 1)
    present = set(indices)
    for i in expected:
        if i not in present:
            raise FileNotFoundError(f"missing frame file {spec.path(i)}")


def _to_frame(img: np.ndarray, path: Path) -> FrameBuffer:
    if img.ndim == 3:
        if img.shape[2] == 4:
            img = img[:, :, :3]
        img = img[:, :, ::-1]  # BGR -> RGB
    if img.dtype == np.uint8:
        return FrameBuffer.from_uint8(img)
    if img.dtype == np.uint16:
        return FrameBuffer.from_uint16(img)
    raise ValueError(f"{path}: unsupported image dtype {img.dtype}")


def read_sequence(spec: SequenceSpec) -> VideoClip:
    """Read a contiguous 0-based frame sequence; depth inferred per file."""
    directory = Path(spec.directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"sequence directory not found: {directory}")
    indices = _sequence_indices(directory, spec.pattern)
    _require_contiguous(spec, indices)
    frames = []
    shape = None
    for i in range(len(indices)):
        path = spec.path(i)
        img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise IOError(f"cannot read image {path}")
        frame = _to_frame(img, path)
        if shape is None:
            shape = frame.data.shape
        elif frame.data.shape != shape:
            raise ValueError(f"{path}: frame shape {frame.data.shape} differs from first frame {shape}")
        frames.append(frame)
    return VideoClip(frames)


def write_sequence(clip: VideoClip, spec: SequenceSpec) -> None:
    directory = Path(spec.directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(clip):
        arr = frame.to_uint8() if spec.bit_depth == 8 else frame.to_uint16()
        if arr.shape[2] == 1:
            out = arr[:, :, 0]
        else:
            out = arr[:, :, ::-1]  # RGB -> BGR
        if not cv2.imwrite(str(spec.path(i)), out):
            raise IOError(f"cannot write image {spec.path(i)}")


def write_mask_sequence(masks: Sequence[OcclusionMask], directory: Path | str,
                        pattern: str = "%06d.png") -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, m in enumerate(masks):
        arr = np.where(m.values, np.uint8(255), np.uint8(0))
        if not cv2.imwrite(str(directory / (pattern % i)), arr):
            raise IOError(f"cannot write mask {directory / (pattern % i)}")


def read_mask_sequence(directory: Path | str, pattern: str = "%06d.png") -> tuple[OcclusionMask, ...]:
    spec = SequenceSpec(directory, pattern)
    indices = _sequence_indices(Path(directory), pattern)
    _require_contiguous(spec, indices)
    masks = []
    for i in range(len(indices)):
        img = cv2.imread(str(spec.path(i)), cv2.IMREAD_GRAYSCALE)
        if img is None:
            raise IOError(f"cannot read mask {spec.path(i)}")
        masks.append(OcclusionMask(img > 127))
    return tuple(masks)


def read_pfm(path: Path | str) -> DisparityMap:
    """Read a single-channel PFM file (sign of the scale picks endianness)."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.readline().strip()
        if magic == b"PF":
            raise ValueError(f"{path}: expected single-channel PFM ('Pf'), got color 'PF'")
        if magic != b"Pf":
            raise ValueError(f"{path}: bad PFM magic {magic!r}")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ValueError(f"{path}: malformed PFM dimensions line")
        width, height = int(dims[0]), int(dims[1])
        if width < 1 or height < 1:
            raise ValueError(f"{path}: invalid PFM dimensions {width}x{height}")
        try:
            scale = float(fh.readline().strip())
        except ValueError as exc:
            raise ValueError(f"{path}: malformed PFM scale line") from exc
        count = width * height
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise ValueError(f"{path}: truncated PFM payload ({len(raw)} of {count * 4} bytes)")
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(raw, dtype=dtype).reshape(height, width)
        return DisparityMap(np.flipud(data))  # PFM rows run bottom-to-top


def write_pfm(disp: DisparityMap, path: Path | str, scale: float = -1.0) -> None:
    if scale == 0:
        raise ValueError("PFM scale must be nonzero")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dtype = "<f4" if scale < 0 else ">f4"
    payload = np.flipud(disp.values).astype(dtype).tobytes()
    with path.open("wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{disp.width} {disp.height}\n".encode("ascii"))
        fh.write(f"{scale:f}\n".encode("ascii"))
        fh.write(payload)


def write_disparity_png_sequence(
    maps: Sequence[DisparityMap], directory: Path | str, pattern: str = "%06d.png"
) -> None:
    """Quantize disparity to 16-bit PNGs with an affine sidecar.

    Values are stored as round((d - offset) / scale); the sidecar records
    {disparity_scale, disparity_offset} for exact-form reconstruction.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lo = min(float(m.values.min()) for m in maps)
    hi = max(float(m.values.max()) for m in maps)
    scale = (hi - lo) / 65535.0 if hi > lo else 1.0
    for i, m in enumerate(maps):
        q = np.rint((m.values.astype(np.float64) - lo) / scale)
        arr = np.clip(q, 0, 65535).astype(np.uint16)
        if not cv2.imwrite(str(directory / (pattern % i)), arr):
            raise IOError(f"cannot write disparity {directory / (pattern % i)}")
    sidecar = {"disparity_scale": scale, "disparity_offset": lo}
    (directory / DISPARITY_SIDECAR).write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")


def read_disparity_sequence(directory: Path | str, pattern: str | None = None) -> list[DisparityMap]:
    """Read disparity maps: .pfm files, or 16-bit PNGs with a sidecar."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"disparity directory not found: {directory}")
    if pattern is None:
        pattern = "%06d.pfm" if any(directory.glob("*.pfm")) else "%06d.png"
    spec = SequenceSpec(directory, pattern)
    indices = _sequence_indices(directory, pattern)
    _require_contiguous(spec, indices)
    if pattern.endswith(".pfm"):
        return [read_pfm(spec.path(i)) for i in range(len(indices))]
    sidecar_path = directory / DISPARITY_SIDECAR
    if not sidecar_path.exists():
        raise FileNotFoundError(f"PNG disparity needs a {DISPARITY_SIDECAR} sidecar in {directory}")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    scale = float(sidecar["disparity_scale"])
    offset = float(sidecar["disparity_offset"])
    maps = []
    for i in range(len(indices)):
        img = cv2.imread(str(spec.path(i)), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise IOError(f"cannot read disparity {spec.path(i)}")
        if img.dtype != np.uint16 or img.ndim != 2:
            raise ValueError(f"{spec.path(i)}: expected single-channel 16-bit PNG")
        maps.append(DisparityMap(img.astype(np.float64) * scale + offset))
    return maps


def _box_halve_width(data: np.ndarray) -> np.ndarray:
    if data.shape[1] % 2 != 0:
        raise ValueError(f"half-SBS needs an even width, got {data.shape[1]}")
    d = data.astype(np.float64)
    return (d[:, 0::2] + d[:, 1::2]) / 2.0


def compose_sbs(left: FrameBuffer, right: FrameBuffer, half: bool = False) -> FrameBuffer:
    """Side-by-side packing; ``half`` box-downsamples each view to half width."""
    if left.data.shape != right.data.shape:
        raise ValueError(f"view shapes differ: {left.data.shape} vs {right.data.shape}")
    if half:
        l = _box_halve_width(left.data)
        r = _box_halve_width(right.data)
    else:
        l = left.data
        r = right.data
    return FrameBuffer(np.concatenate([l, r], axis=1).astype(np.float32))


def compose_anaglyph(left: FrameBuffer, right: FrameBuffer) -> FrameBuffer:
    """Red/cyan packing: red from the left view, green+blue from the right."""
    if left.data.shape != right.data.shape:
        raise ValueError(f"view shapes differ: {left.data.shape} vs {right.data.shape}")
    if left.channels != 3:
        raise ValueError("anaglyph needs 3-channel views")
    out = right.data.copy()
    out[:, :, 0] = left.data[:, :, 0]
    return FrameBuffer(out)
