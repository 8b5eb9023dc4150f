"""Command-line pipeline driver.

Subcommands:
  predict   run the full pipeline over clip manifests and emit predictions
  evaluate  score a prediction CSV against a ground-truth CSV
  synth     generate a synthetic clip suite with ground truth
  trace     dump per-stage diagnostics for one clip

Configuration comes from an optional JSON file (--config) overridden by
flags; defaults match the published pipeline settings. The CRASHPIPE_LOG
environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classify import (
    ClassCentroids,
    EmbeddingBank,
    aggregate_image_embedding,
    build_class_centroids,
    classify,
    default_prompt_sets,
    load_prompt_sets,
    read_bank,
    select_peak_frames,
)
from .flow import FlowParams
from .frames import GrayFrame, load_clip, load_manifest, save_pgm
from .scoring import (
    Prediction,
    ScoreConfig,
    evaluate,
    read_predictions,
    write_predictions,
    write_report_csv,
    write_report_json,
)
from .spatial import (
    SpatialConfig,
    accumulate_magnitude,
    localize_impact,
    percentile_threshold,
    select_window,
)
from .synth import generate_clip, suite_specs
from .temporal import (
    DetectorConfig,
    detect_peak,
    frame_diff_series,
    locate_accident,
    rolling_mean,
    zscore,
)

log = logging.getLogger("crashpipe")

PLACEHOLDER_CLASS = "single"


@dataclass
class PipelineConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    spatial: SpatialConfig = field(default_factory=SpatialConfig)
    score: ScoreConfig = field(default_factory=ScoreConfig)
    prompt_set: Path | None = None
    prompt_bank: Path | None = None
    frame_bank: Path | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @classmethod
    def from_file(cls, path: Path | str) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        flow = FlowParams(**raw.get("flow", {}))
        spatial_kwargs = raw.get("spatial", {})
        return cls(
            detector=DetectorConfig(**raw.get("detector", {})),
            spatial=SpatialConfig(flow=flow, **spatial_kwargs),
            score=ScoreConfig(**raw.get("score", {})),
            prompt_set=Path(raw["prompts"]) if "prompts" in raw else None,
            prompt_bank=Path(raw["prompt_bank"]) if "prompt_bank" in raw else None,
            frame_bank=Path(raw["frame_bank"]) if "frame_bank" in raw else None,
            workers=int(raw.get("workers", 1)),
        )


@dataclass
class VideoOutcome:
    manifest: Path
    video_id: str | None = None
    prediction: Prediction | None = None
    peak_indices: list[int] | None = None
    error: str | None = None


def _classifier_from(cfg: PipelineConfig) -> tuple[ClassCentroids, EmbeddingBank]:
    """Load banks and prompt sets; failures here abort the whole run."""
    if cfg.prompt_bank is None or cfg.frame_bank is None:
        raise SystemExit(
            "classification needs --prompt-bank and --frame-bank "
            "(or pass --no-classify)"
        )
    prompt_sets = (
        load_prompt_sets(cfg.prompt_set) if cfg.prompt_set else default_prompt_sets()
    )
    prompt_bank = read_bank(cfg.prompt_bank)
    frame_bank = read_bank(cfg.frame_bank)
    return build_class_centroids(prompt_bank, prompt_sets), frame_bank


def _predict_one(
    manifest_path: Path,
    cfg: PipelineConfig,
    centroids: ClassCentroids | None,
    frame_bank: EmbeddingBank | None,
) -> VideoOutcome:
    outcome = VideoOutcome(manifest=manifest_path)
    try:
        manifest = load_manifest(manifest_path)
        outcome.video_id = manifest.id
        clip = load_clip(manifest)
        temporal = locate_accident(clip, cfg.detector)
        impact = localize_impact(clip, temporal.peak_frame, cfg.spatial)
        indices = select_peak_frames(clip.n_frames, temporal.peak_frame)
        outcome.peak_indices = indices
        if centroids is not None and frame_bank is not None:
            v = aggregate_image_embedding(frame_bank, manifest.id, indices)
            label = classify(v, centroids).predicted
        else:
            label = PLACEHOLDER_CLASS
        outcome.prediction = Prediction(
            video_id=manifest.id,
            time_sec=temporal.time_sec,
            cx=impact.cx,
            cy=impact.cy,
            label=label,
        )
    except Exception as exc:  # per-video isolation: record and continue
        outcome.error = str(exc)
    return outcome


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if not args.manifests:
        raise SystemExit("predict: no manifests given")
    centroids = frame_bank = None
    if args.no_classify:
        log.warning(
            "classification disabled; emitting fixed placeholder class '%s'",
            PLACEHOLDER_CLASS,
        )
    else:
        centroids, frame_bank = _classifier_from(cfg)

    manifests = [Path(m) for m in args.manifests]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        outcomes = list(
            pool.map(lambda m: _predict_one(m, cfg, centroids, frame_bank), manifests)
        )

    predictions = [o.prediction for o in outcomes if o.prediction is not None]
    failures = [o for o in outcomes if o.error is not None]
    write_predictions(predictions, args.out)
    log.info("wrote %d predictions to %s", len(predictions), args.out)

    if args.emit_frame_requests:
        requests = {
            o.video_id: {"manifest": str(o.manifest), "frames": o.peak_indices}
            for o in outcomes
            if o.video_id is not None and o.peak_indices is not None
        }
        Path(args.emit_frame_requests).write_text(
            json.dumps(requests, indent=2) + "\n", encoding="utf-8"
        )
        log.info("wrote frame requests for %d videos to %s", len(requests), args.emit_frame_requests)

    for o in failures:
        log.error("failed %s: %s", o.manifest, o.error)
    if failures:
        log.error("%d of %d videos failed", len(failures), len(outcomes))
        return 1
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    report = evaluate(read_predictions(args.pred), read_predictions(args.gt), cfg.score)
    write_report_csv(report, args.out)
    log.info("wrote report to %s", args.out)
    if args.json:
        write_report_json(report, args.json)
        log.info("wrote JSON report to %s", args.json)
    print(
        f"T={report.mean_t:.6f} S={report.mean_s:.6f} "
        f"C={report.mean_c:.6f} H={report.mean_h:.6f}"
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    truths = []
    for spec in suite_specs(args.seed, args.count):
        clip, gt = generate_clip(spec)
        clip_dir = out_dir / spec.id
        clip_dir.mkdir(exist_ok=True)
        names = []
        for i, frame in enumerate(clip.frames):
            name = f"frame_{i:04d}.pgm"
            save_pgm(frame, clip_dir / name)
            names.append(name)
        (clip_dir / "manifest.json").write_text(
            json.dumps({"id": spec.id, "fps": spec.fps, "frames": names}, indent=2) + "\n",
            encoding="utf-8",
        )
        truths.append(gt)
        log.info("generated %s (%d frames)", spec.id, clip.n_frames)
    write_predictions(truths, out_dir / "ground_truth.csv")
    log.info("wrote %s", out_dir / "ground_truth.csv")
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    clip = load_clip(load_manifest(args.manifest))
    diffs = frame_diff_series(clip, cfg.detector)
    smoothed = rolling_mean(diffs, cfg.detector.window)
    z = zscore(smoothed, cfg.detector.eps)
    peak, thresholded = detect_peak(z, cfg.detector.threshold)

    with open(out_dir / "signal.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("frame,diff,smoothed,z\n")
        for t in range(diffs.values.size):
            fh.write(f"{t},{diffs.values[t]:.6f},{smoothed[t]:.6f},{z.values[t]:.6f}\n")

    window = select_window(clip.n_frames, peak, cfg.spatial)
    magmap = percentile_threshold(
        accumulate_magnitude(clip, window, cfg.spatial), cfg.spatial.percentile
    )
    lo, hi = float(magmap.m.min()), float(magmap.m.max())
    if hi > lo:
        scaled = np.clip((magmap.m - lo) * (255.0 / (hi - lo)), 0.0, 255.0)
    else:
        scaled = np.zeros_like(magmap.m)
    save_pgm(
        GrayFrame(width=magmap.width, height=magmap.height, data=scaled),
        out_dir / "magnitude.pgm",
    )

    indices = select_peak_frames(clip.n_frames, peak)
    (out_dir / "window.json").write_text(
        json.dumps(
            {
                "peak_frame": peak,
                "time_sec": peak / clip.fps,
                "thresholded": thresholded,
                "flow_window": {"start": window.start, "stop": window.stop},
                "classify_frames": indices,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    log.info("wrote trace files to %s", out_dir)
    return 0


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = (
        PipelineConfig.from_file(args.config)
        if getattr(args, "config", None)
        else PipelineConfig()
    )
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    if getattr(args, "prompts", None):
        cfg.prompt_set = Path(args.prompts)
    if getattr(args, "prompt_bank", None):
        cfg.prompt_bank = Path(args.prompt_bank)
    if getattr(args, "frame_bank", None):
        cfg.frame_bank = Path(args.frame_bank)
    if getattr(args, "sigma_t", None):
        cfg.score.sigma_t = args.sigma_t
    if getattr(args, "sigma_s", None):
        cfg.score.sigma_s = args.sigma_s
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crashpipe",
        description="Zero-shot collision time / impact point / class pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="run the pipeline over clip manifests")
    p.add_argument("manifests", nargs="*", help="manifest JSON paths")
    p.add_argument("--out", required=True, help="prediction CSV to write")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--workers", type=int, help="videos processed concurrently")
    p.add_argument("--no-classify", action="store_true", help="skip classification")
    p.add_argument("--prompts", help="prompt-set JSON (default: built-in set)")
    p.add_argument("--prompt-bank", help="EMB1 prompt bank path")
    p.add_argument("--frame-bank", help="EMB1 frame bank path")
    p.add_argument(
        "--emit-frame-requests",
        help="write the exporter request JSON for the selected peak frames",
    )
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="prediction CSV")
    p.add_argument("--gt", required=True, help="ground-truth CSV")
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--json", help="also write the report as JSON")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--sigma-t", type=float, dest="sigma_t", help="temporal kernel width (s)")
    p.add_argument("--sigma-s", type=float, dest="sigma_s", help="spatial kernel width")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic clip suite")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("trace", help="dump per-stage diagnostics for one clip")
    p.add_argument("manifest", help="manifest JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("CRASHPIPE_LOG", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
