"""Command-line pipeline: warp, convert, dataset, and a mock wire backend.

``warp`` and ``convert`` are split so the inpainting stage can be A/B tested
against identical warped intermediates. Errors land on stderr with a stage
label (io/splat/schedule/backend/report) and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import socket
import sys
import threading
from pathlib import Path

import numpy as np

from . import report as report_mod
from . import video_io
from .dataset import build_triplet, filter_sample, write_sample
from .disparity import DepthMap, depth_to_disparity, parallax_align
from .inpaint import BackendDescriptor, NullBackend, PullPushBackend, create_backend
from .model import StereoParams, VideoClip
from .scheduler import plan_chunks, plan_tiles, run_tiled
from .splat import SplatOptions, forward_splat_clip
from .wire import serve_stream

DEFAULT_MAX_DISPARITY = 40.0


def _fail(stage: str, message) -> int:
    print(f"stereopipe: [{stage}] {message}", file=sys.stderr)
    return 1


def _info(message: str) -> None:
    print(f"stereopipe: {message}", file=sys.stderr)


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="left-view frame sequence directory")
    p.add_argument("--depth", help="normalized inverse-depth sequence directory (grayscale PNG)")
    p.add_argument("--disparity", help="disparity sequence directory (PFM, or 16-bit PNG + sidecar)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-disparity", type=float, default=DEFAULT_MAX_DISPARITY,
                   help="parallax budget in pixels when converting depth (default %(default)s)")
    p.add_argument("--convergence", type=float, default=1.0,
                   help="inverse depth mapped to zero disparity (default %(default)s)")
    p.add_argument("--direction", choices=["left_to_right", "right_to_left"],
                   default="left_to_right", help="synthesis direction (default %(default)s)")
    p.add_argument("--coverage-threshold", type=float, default=1e-3,
                   help="splat coverage below this marks a hole (default %(default)s)")
    p.add_argument("--mask-dilation", type=int, default=0,
                   help="dilate occlusion masks by this many pixels (default %(default)s)")
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                   help="bit-reproducible outputs regardless of --threads")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default %(default)s)")


def _splat_options(args: argparse.Namespace) -> SplatOptions:
    return SplatOptions(
        coverage_threshold=args.coverage_threshold,
        deterministic=args.deterministic,
        mask_dilation_px=args.mask_dilation,
    )


def _load_inputs(args: argparse.Namespace):
    left = video_io.read_sequence(video_io.SequenceSpec(args.input))
    if args.disparity:
        disp = video_io.read_disparity_sequence(args.disparity)
    elif args.depth:
        params = StereoParams(args.max_disparity, args.convergence, args.direction)
        depth_clip = video_io.read_sequence(video_io.SequenceSpec(args.depth))
        disp = [depth_to_disparity(DepthMap(f.data[:, :, 0]), params) for f in depth_clip]
    else:
        raise FileNotFoundError("one of --depth or --disparity is required")
    if len(disp) != len(left):
        raise ValueError(f"{len(left)} frames but {len(disp)} depth/disparity maps")
    return left, disp


def _warp_rows(results, disp) -> list[dict]:
    rows = []
    for i, (res, d) in enumerate(zip(results, disp)):
        dv = d.values.astype(np.float64)
        rows.append(
            {
                "frame": i,
                "occluded_fraction": res.mask.hole_fraction(),
                "coverage_mean": float(res.coverage.mean()),
                "disp_min": float(dv.min()),
                "disp_max": float(dv.max()),
                "disp_mean": float(dv.mean()),
            }
        )
    return rows


def cmd_warp(args: argparse.Namespace) -> int:
    try:
        left, disp = _load_inputs(args)
    except Exception as exc:
        return _fail("io", exc)
    try:
        results = forward_splat_clip(left, disp, _splat_options(args), workers=args.threads)
    except Exception as exc:
        return _fail("splat", exc)
    out = Path(args.out)
    try:
        warped = VideoClip([r.warped for r in results], fps=left.fps)
        video_io.write_sequence(warped, video_io.SequenceSpec(out / "warped", bit_depth=16))
        video_io.write_mask_sequence([r.mask for r in results], out / "mask")
    except Exception as exc:
        return _fail("io", exc)
    try:
        sample = np.concatenate([d.values.ravel() for d in disp])
        paths = report_mod.write_warp_report(out, _warp_rows(results, disp), sample)
    except Exception as exc:
        return _fail("report", exc)
    _info(f"warped {len(left)} frames -> {out} (report: {paths['figure'].name})")
    return 0


def _parse_tile(arg: str | None) -> tuple[int, int] | None:
    if arg is None:
        return None
    m = arg.lower().split("x")
    if len(m) != 2:
        raise ValueError(f"--tile expects HxW, got {arg!r}")
    return int(m[0]), int(m[1])


def cmd_convert(args: argparse.Namespace) -> int:
    try:
        left, disp = _load_inputs(args)
    except Exception as exc:
        return _fail("io", exc)
    try:
        results = forward_splat_clip(left, disp, _splat_options(args), workers=args.threads)
        warped = VideoClip([r.warped for r in results], fps=left.fps)
        masks = [r.mask for r in results]
    except Exception as exc:
        return _fail("splat", exc)
    try:
        chunk_plan = plan_chunks(len(warped), args.chunk, args.overlap)
        tile = _parse_tile(args.tile)
        if tile is None:
            tile_plan = plan_tiles(warped.height, warped.width, warped.height, warped.width, 0)
        else:
            tile_plan = plan_tiles(warped.height, warped.width, tile[0], tile[1], args.tile_overlap)
    except Exception as exc:
        return _fail("schedule", exc)
    try:
        desc = BackendDescriptor(kind=args.backend, capacity=args.chunk, transport=args.external)
        backend = create_backend(desc)
    except Exception as exc:
        return _fail("backend", exc)
    try:
        right = run_tiled(backend, warped, masks, chunk_plan, tile_plan, workers=args.threads)
    except Exception as exc:
        return _fail("backend", exc)
    finally:
        backend.close()
    out = Path(args.out)
    try:
        if args.format == "separate":
            video_io.write_sequence(left, video_io.SequenceSpec(out / "left"))
            video_io.write_sequence(right, video_io.SequenceSpec(out / "right"))
        else:
            if args.format == "sbs":
                frames = [video_io.compose_sbs(l, r) for l, r in zip(left, right)]
            elif args.format == "half-sbs":
                frames = [video_io.compose_sbs(l, r, half=True) for l, r in zip(left, right)]
            else:
                frames = [video_io.compose_anaglyph(l, r) for l, r in zip(left, right)]
            video_io.write_sequence(VideoClip(frames, fps=left.fps),
                                    video_io.SequenceSpec(out / "stereo"))
    except Exception as exc:
        return _fail("io", exc)
    _info(f"converted {len(left)} frames -> {out} ({args.format})")
    return 0


def _discover_samples(left_root: Path, right_root: Path, disp_root: Path) -> list[tuple[str, Path, Path, Path]]:
    subdirs = sorted(p.name for p in left_root.iterdir() if p.is_dir())
    if subdirs:
        out = []
        for name in subdirs:
            out.append((name, left_root / name, right_root / name, disp_root / name))
        return out
    return [(left_root.name, left_root, right_root, disp_root)]


def cmd_dataset(args: argparse.Namespace) -> int:
    left_root, right_root, disp_root = Path(args.input), Path(args.right), Path(args.disparity)
    for p in (left_root, right_root, disp_root):
        if not p.is_dir():
            return _fail("io", f"directory not found: {p}")
    samples = _discover_samples(left_root, right_root, disp_root)
    out = Path(args.out)
    rows = []
    kept_count = 0
    for sample_id, left_dir, right_dir, disp_dir in samples:
        try:
            left = video_io.read_sequence(video_io.SequenceSpec(left_dir))
            right = video_io.read_sequence(video_io.SequenceSpec(right_dir))
            disp = video_io.read_disparity_sequence(disp_dir)
            shift = 0
            if args.align:
                left, right, disp, align_report = parallax_align(left, right, disp)
                shift = align_report.shift_px
            triplet = build_triplet(left, right, disp, shift_px=shift)
            kept = filter_sample(triplet, args.psnr_threshold)
            if kept:
                write_sample(triplet, out, sample_id, threshold_db=args.psnr_threshold)
                kept_count += 1
            rows.append(
                {
                    "id": sample_id,
                    "frames": triplet.meta["frames"],
                    "psnr_db": triplet.meta["psnr_db"],
                    "kept": kept,
                }
            )
            _info(f"sample {sample_id}: psnr {triplet.meta['psnr_db']:.2f} dB "
                  f"({'kept' if kept else 'dropped'})")
        except Exception as exc:
            rows.append({"id": sample_id, "kept": False, "error": str(exc)})
            _info(f"sample {sample_id}: failed ({exc})")
    try:
        report_mod.write_dataset_report(out, rows, args.psnr_threshold)
    except Exception as exc:
        return _fail("report", exc)
    failed = sum(1 for r in rows if "error" in r)
    _info(f"dataset: {kept_count} kept, {len(rows) - kept_count - failed} dropped, {failed} failed")
    if rows and failed == len(rows):
        return _fail("io", "every sample failed")
    return 0


def _serve_connection(conn: socket.socket, backend) -> None:
    with conn:
        rfile = conn.makefile("rb")
        wfile = conn.makefile("wb")
        try:
            serve_stream(rfile, wfile, backend)
        except (BrokenPipeError, ConnectionError):
            pass


def cmd_mock_backend(args: argparse.Namespace) -> int:
    backend = NullBackend(args.capacity) if args.mode == "echo" else PullPushBackend(args.capacity)
    if args.listen == "stdio":
        _info(f"mock backend ({args.mode}) on stdio")
        serve_stream(sys.stdin.buffer, sys.stdout.buffer, backend)
        return 0
    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        return _fail("backend", f"--listen expects stdio or HOST:PORT, got {args.listen!r}")
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        srv.bind((host, int(port)))
        srv.listen()
        _info(f"mock backend ({args.mode}) listening on {host}:{srv.getsockname()[1]}")
        while True:
            conn, _addr = srv.accept()
            # one thread per connection so a lingering client cannot starve
            # new sessions; echo/pullpush backends are reentrant
            threading.Thread(target=_serve_connection, args=(conn, backend), daemon=True).start()
    except KeyboardInterrupt:
        return 0
    finally:
        srv.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereopipe",
        description="Convert monocular video plus depth/disparity into stereoscopic 3D.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("warp", help="splat the left view and write warped frames + masks + stats")
    _add_input_flags(p)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("convert", help="full pipeline: splat, inpaint via a backend, compose stereo")
    _add_input_flags(p)
    p.add_argument("--chunk", type=int, default=25, help="backend frame capacity (default %(default)s)")
    p.add_argument("--overlap", type=int, default=3, help="autoregressive context frames (default %(default)s)")
    p.add_argument("--tile", default=None, help="tile size HxW (default: no tiling)")
    p.add_argument("--tile-overlap", type=int, default=128,
                   help="minimum tile overlap in pixels (default %(default)s)")
    p.add_argument("--backend", choices=["null", "pullpush", "external"], default="pullpush",
                   help="inpainting backend (default %(default)s)")
    p.add_argument("--external", default=None, help="external transport: command or HOST:PORT")
    p.add_argument("--format", choices=["sbs", "half-sbs", "anaglyph", "separate"], default="sbs",
                   help="stereo output packing (default %(default)s)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("dataset", help="build filtered training triplets from stereo clips + disparity")
    p.add_argument("--input", required=True, help="left-view root (sample subdirs or one sequence)")
    p.add_argument("--right", required=True, help="right-view root, mirroring --input")
    p.add_argument("--disparity", required=True, help="disparity root, mirroring --input")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--align", action="store_true", help="parallax-align each pair before warping")
    p.add_argument("--psnr-threshold", type=float, default=25.0,
                   help="keep samples scoring strictly above this (default %(default)s dB)")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("mock-backend", help="serve the wire protocol with an echo or pullpush filler")
    p.add_argument("--mode", choices=["echo", "pullpush"], default="echo")
    p.add_argument("--listen", default="stdio", help="stdio or HOST:PORT (default %(default)s)")
    p.add_argument("--capacity", type=int, default=25, help="max frames per chunk (default %(default)s)")
    p.set_defaults(func=cmd_mock_backend)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
