"""stereopipe: monocular video + depth/disparity -> stereoscopic 3D.

Forward splatting with occlusion-mask extraction, autoregressive chunk and
overlapping-tile scheduling around a pluggable inpainting backend, and a
stereo training-dataset builder.
"""

from .disparity import AlignmentReport, DepthMap, depth_to_disparity, disparity_stats, parallax_align
from .inpaint import (
    BackendDescriptor,
    ExternalBackend,
    InpaintChunk,
    NullBackend,
    PullPushBackend,
    create_backend,
    inpaint_chunk,
    inpaint_pullpush,
)
from .model import (
    LEFT_TO_RIGHT,
    PSNR_CAP_DB,
    RIGHT_TO_LEFT,
    DisparityMap,
    FrameBuffer,
    OcclusionMask,
    StereoParams,
    VideoClip,
    pooled_psnr,
    psnr,
)
from .scheduler import (
    ChunkEntry,
    ChunkPlan,
    TilePlan,
    TileRect,
    blend_tiles,
    plan_chunks,
    plan_tiles,
    run_autoregressive,
    run_tiled,
)
from .splat import SplatOptions, SplatResult, forward_splat_clip, forward_splat_frame, splat_weight
from .dataset import (
    TrainingTriplet,
    TripletOptions,
    build_triplet,
    filter_sample,
    read_sample,
    write_sample,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "BackendDescriptor",
    "ChunkEntry",
    "ChunkPlan",
    "DepthMap",
    "DisparityMap",
    "ExternalBackend",
    "FrameBuffer",
    "InpaintChunk",
    "LEFT_TO_RIGHT",
    "NullBackend",
    "OcclusionMask",
    "PSNR_CAP_DB",
    "PullPushBackend",
    "RIGHT_TO_LEFT",
    "SplatOptions",
    "SplatResult",
    "StereoParams",
    "TilePlan",
    "TileRect",
    "TrainingTriplet",
    "TripletOptions",
    "VideoClip",
    "blend_tiles",
    "build_triplet",
    "create_backend",
    "depth_to_disparity",
    "disparity_stats",
    "filter_sample",
    "forward_splat_clip",
    "forward_splat_frame",
    "inpaint_chunk",
    "inpaint_pullpush",
    "parallax_align",
    "plan_chunks",
    "plan_tiles",
    "pooled_psnr",
    "psnr",
    "read_sample",
    "run_autoregressive",
    "run_tiled",
    "splat_weight",
    "write_sample",
]
