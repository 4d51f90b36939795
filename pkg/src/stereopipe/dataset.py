"""Training-triplet construction: warp, mask, score, filter, persist.

A triplet pairs the splatted left view and its occlusion masks with the real
right view as ground truth, scored by PSNR so badly matched disparity gets
filtered out of the corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import video_io
from .disparity import disparity_stats
from .model import DisparityMap, OcclusionMask, VideoClip, pooled_psnr
from .splat import SplatOptions, forward_splat_clip

DEFAULT_PSNR_THRESHOLD_DB = 25.0


@dataclass(frozen=True)
class TripletOptions:
    splat: SplatOptions = SplatOptions()
    psnr_all_pixels: bool = False  # score holes too (default: non-occluded only)


@dataclass(frozen=True)
class TrainingTriplet:
    warped: VideoClip
    masks: tuple[OcclusionMask, ...]
    right: VideoClip
    meta: dict = field(repr=False)


def build_triplet(
    left: VideoClip,
    right: VideoClip,
    disp: Sequence[DisparityMap],
    opts: TripletOptions = TripletOptions(),
    shift_px: int = 0,
) -> TrainingTriplet:
    """Warp ``left`` along ``disp`` and score it against ``right``.

    Inputs are expected to be parallax-aligned already; pass the alignment's
    shift so it lands in the metadata. PSNR pools one MSE across the whole
    clip, over non-occluded pixels unless ``psnr_all_pixels`` is set.
    """
    if (left.height, left.width, left.channels) != (right.height, right.width, right.channels):
        raise ValueError("left and right clips must share dimensions")
    if len(left) != len(right):
        raise ValueError(f"left has {len(left)} frames, right has {len(right)}")
    results = forward_splat_clip(left, list(disp), opts.splat)
    warped = VideoClip([r.warped for r in results], fps=left.fps)
    masks = tuple(r.mask for r in results)
    if opts.psnr_all_pixels:
        valids = None
    else:
        valids = [~m.values for m in masks]
    score = pooled_psnr(list(zip(warped.frames, right.frames)), valids)
    meta = {
        "psnr_db": score,
        "shift_px": int(shift_px),
        "frames": len(left),
        "width": left.width,
        "height": left.height,
        "disparity": disparity_stats(list(disp)),
    }
    return TrainingTriplet(warped=warped, masks=masks, right=right, meta=meta)


def filter_sample(triplet: TrainingTriplet, threshold_db: float = DEFAULT_PSNR_THRESHOLD_DB) -> bool:
    """Keep only samples scoring strictly above the threshold."""
    return triplet.meta["psnr_db"] > threshold_db


def write_sample(
    triplet: TrainingTriplet,
    root: Path | str,
    sample_id: str,
    threshold_db: float = DEFAULT_PSNR_THRESHOLD_DB,
) -> Path:
    """Persist one triplet under root/<id>/{warped,mask,right}/ + meta.json.

    Frames go out as 16-bit PNG, masks as 8-bit; returns the manifest path.
    Refuses to overwrite an existing sample id.
    """
    root = Path(root)
    sample_dir = root / sample_id
    if sample_dir.exists():
        raise FileExistsError(f"sample id {sample_id!r} already exists under {root}")
    sample_dir.mkdir(parents=True)
    video_io.write_sequence(triplet.warped, video_io.SequenceSpec(sample_dir / "warped", bit_depth=16))
    video_io.write_sequence(triplet.right, video_io.SequenceSpec(sample_dir / "right", bit_depth=16))
    video_io.write_mask_sequence(triplet.masks, sample_dir / "mask")
    manifest = {
        "id": sample_id,
        "frames": triplet.meta["frames"],
        "width": triplet.meta["width"],
        "height": triplet.meta["height"],
        "psnr_db": triplet.meta["psnr_db"],
        "shift_px": triplet.meta["shift_px"],
        "disparity": triplet.meta["disparity"],
        "kept": filter_sample(triplet, threshold_db),
        "threshold_db": threshold_db,
    }
    manifest_path = sample_dir / "meta.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def read_sample(root: Path | str, sample_id: str) -> TrainingTriplet:
    """Load a persisted triplet (inverse of write_sample, within quantization)."""
    sample_dir = Path(root) / sample_id
    manifest = json.loads((sample_dir / "meta.json").read_text(encoding="utf-8"))
    warped = video_io.read_sequence(video_io.SequenceSpec(sample_dir / "warped", bit_depth=16))
    right = video_io.read_sequence(video_io.SequenceSpec(sample_dir / "right", bit_depth=16))
    masks = video_io.read_mask_sequence(sample_dir / "mask")
    meta = {
        "psnr_db": manifest["psnr_db"],
        "shift_px": manifest["shift_px"],
        "frames": manifest["frames"],
        "width": manifest["width"],
        "height": manifest["height"],
        "disparity": manifest["disparity"],
    }
    return TrainingTriplet(warped=warped, masks=masks, right=right, meta=meta)
