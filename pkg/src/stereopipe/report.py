"""Report rendering: delimited per-frame/per-sample stats plus figures.

Every report writes a CSV, a JSON summary, and a PNG figure next to each
other so pipeline runs can be audited without re-running anything.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def write_warp_report(
    out_dir: Path | str,
    frame_rows: Sequence[dict],
    disparity_sample: np.ndarray,
) -> dict[str, Path]:
    """Per-frame splat stats: CSV + JSON summary + occlusion/disparity figure.

    ``frame_rows`` carries one dict per frame with keys frame,
    occluded_fraction, coverage_mean, disp_min, disp_max, disp_mean.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "warp_stats.csv"
    fields = ["frame", "occluded_fraction", "coverage_mean", "disp_min", "disp_max", "disp_mean"]
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows({k: row[k] for k in fields} for row in frame_rows)

    occluded = [row["occluded_fraction"] for row in frame_rows]
    summary = {
        "frames": len(frame_rows),
        "occluded_fraction_mean": float(np.mean(occluded)) if occluded else 0.0,
        "occluded_fraction_max": float(np.max(occluded)) if occluded else 0.0,
        "disparity": {
            "min": min(row["disp_min"] for row in frame_rows),
            "max": max(row["disp_max"] for row in frame_rows),
            "mean": float(np.mean([row["disp_mean"] for row in frame_rows])),
        },
    }
    json_path = out_dir / "warp_stats.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))
    ax0.plot([row["frame"] for row in frame_rows], occluded, marker="o", markersize=3)
    ax0.set_xlabel("frame")
    ax0.set_ylabel("occluded fraction")
    ax0.set_title("Disocclusion per frame")
    ax1.hist(np.asarray(disparity_sample).ravel(), bins=50, color="steelblue")
    ax1.set_xlabel("disparity (px)")
    ax1.set_ylabel("pixels")
    ax1.set_title("Disparity distribution")
    fig.tight_layout()
    fig_path = out_dir / "warp_report.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "json": json_path, "figure": fig_path}


def write_dataset_report(
    out_dir: Path | str,
    sample_rows: Sequence[dict],
    threshold_db: float,
) -> dict[str, Path]:
    """Corpus summary: per-sample CSV, counts JSON, and a PSNR histogram.

    ``sample_rows`` carries one dict per sample with keys id, frames,
    psnr_db, kept (and optionally error for failed samples).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "dataset_summary.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["id", "frames", "psnr_db", "kept", "error"])
        writer.writeheader()
        for row in sample_rows:
            writer.writerow(
                {
                    "id": row["id"],
                    "frames": row.get("frames", ""),
                    "psnr_db": row.get("psnr_db", ""),
                    "kept": row.get("kept", False),
                    "error": row.get("error", ""),
                }
            )

    scored = [row["psnr_db"] for row in sample_rows if "psnr_db" in row]
    kept = sum(1 for row in sample_rows if row.get("kept"))
    failed = sum(1 for row in sample_rows if "error" in row)
    summary = {
        "samples": len(sample_rows),
        "kept": kept,
        "dropped": len(sample_rows) - kept - failed,
        "failed": failed,
        "threshold_db": threshold_db,
        "psnr_db": {
            "min": min(scored) if scored else None,
            "max": max(scored) if scored else None,
            "mean": float(np.mean(scored)) if scored else None,
        },
    }
    json_path = out_dir / "dataset_summary.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    fig, ax = plt.subplots(figsize=(6, 4))
    if scored:
        ax.hist(scored, bins=30, color="steelblue")
    ax.axvline(threshold_db, color="crimson", linestyle="--", label=f"threshold {threshold_db:g} dB")
    ax.set_xlabel("PSNR (dB)")
    ax.set_ylabel("samples")
    ax.set_title(f"Corpus PSNR (kept {kept}/{len(sample_rows)})")
    ax.legend()
    fig.tight_layout()
    fig_path = out_dir / "psnr_hist.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "json": json_path, "figure": fig_path}
