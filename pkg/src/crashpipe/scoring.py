"""Challenge metric: Gaussian similarities, accuracy, and their harmonic mean.

Per video, the temporal component applies a Gaussian kernel to the time
error, the spatial component the same form to the Euclidean distance in
normalized coordinates, and the classification component is top-1
accuracy. The composite is the harmonic mean, which is zero whenever any
component is zero. Batch evaluation reads and writes CSV files with the
shared ``video_id,time_sec,cx,cy,class`` schema.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .taxonomy import canonical_class

__all__ = [
    "ScoreConfig",
    "Prediction",
    "VideoScore",
    "ScoreReport",
    "temporal_score",
    "spatial_score",
    "class_score",
    "harmonic",
    "evaluate",
    "read_predictions",
    "write_predictions",
    "write_report_csv",
    "report_as_dict",
    "write_report_json",
]

PREDICTION_HEADER = ["video_id", "time_sec", "cx", "cy", "class"]


@dataclass
class ScoreConfig:
    sigma_t: float = 2.0  # temporal Gaussian width, seconds
    sigma_s: float = 0.1  # spatial Gaussian width, normalized units

    def __post_init__(self) -> None:
        if self.sigma_t <= 0 or self.sigma_s <= 0:
            raise ValueError(f"sigma_t and sigma_s must be positive, got {self.sigma_t}, {self.sigma_s}")


@dataclass
class Prediction:
    """One video's predicted (or ground-truth) time, impact point, and class."""

    video_id: str
    time_sec: float
    cx: float
    cy: float
    label: str

    def __post_init__(self) -> None:
        self.label = canonical_class(self.label)
        if self.time_sec < 0:
            raise ValueError(f"'{self.video_id}': time_sec must be >= 0, got {self.time_sec}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(
                f"'{self.video_id}': impact point ({self.cx}, {self.cy}) outside [0, 1]^2"
            )


@dataclass(frozen=True)
class VideoScore:
    video_id: str
    t: float
    s: float
    c: float
    h: float


@dataclass
class ScoreReport:
    rows: list[VideoScore]  # sorted by video_id
    mean_t: float
    mean_s: float
    mean_c: float
    mean_h: float


def temporal_score(t_pred: float, t_gt: float, sigma_t: float = 2.0) -> float:
    """exp(-((t_pred - t_gt) / sigma_t)^2 / 2)."""
    if sigma_t <= 0:
        raise ValueError(f"sigma_t must be positive, got {sigma_t}")
    return math.exp(-0.5 * ((t_pred - t_gt) / sigma_t) ** 2)


def spatial_score(
    pred: tuple[float, float], gt: tuple[float, float], sigma_s: float = 0.1
) -> float:
    """Gaussian of the Euclidean distance between normalized points."""
    if sigma_s <= 0:
        raise ValueError(f"sigma_s must be positive, got {sigma_s}")
    d = math.hypot(pred[0] - gt[0], pred[1] - gt[1])
    return math.exp(-0.5 * (d / sigma_s) ** 2)


def class_score(pred: str, gt: str) -> int:
    """Top-1 accuracy on canonicalized class names."""
    return int(canonical_class(pred) == canonical_class(gt))


def harmonic(t: float, s: float, c: float) -> float:
    """3/(1/t + 1/s + 1/c), hard zero when any component is zero or below."""
    if min(t, s, c) <= 0.0:
        return 0.0
    return 3.0 / (1.0 / t + 1.0 / s + 1.0 / c)


def evaluate(
    preds: list[Prediction], gts: list[Prediction], cfg: ScoreConfig | None = None
) -> ScoreReport:
    """Score every ground-truth video against its unique prediction."""
    cfg = cfg or ScoreConfig()

    def index_unique(items: list[Prediction], what: str) -> dict[str, Prediction]:
        by_id: dict[str, Prediction] = {}
        dupes = []
        for item in items:
            if item.video_id in by_id:
                dupes.append(item.video_id)
            by_id[item.video_id] = item
        if dupes:
            raise ValueError(f"duplicate video ids in {what}: {sorted(set(dupes))}")
        return by_id

    pred_by_id = index_unique(preds, "predictions")
    gt_by_id = index_unique(gts, "ground truth")
    missing = sorted(set(gt_by_id) - set(pred_by_id))
    surplus = sorted(set(pred_by_id) - set(gt_by_id))
    if missing or surplus:
        raise ValueError(
            f"prediction/ground-truth mismatch: missing predictions for {missing}, "
            f"predictions without ground truth {surplus}"
        )
    rows = []
    for vid in sorted(gt_by_id):
        p, g = pred_by_id[vid], gt_by_id[vid]
        t = temporal_score(p.time_sec, g.time_sec, cfg.sigma_t)
        s = spatial_score((p.cx, p.cy), (g.cx, g.cy), cfg.sigma_s)
        c = class_score(p.label, g.label)
        rows.append(VideoScore(video_id=vid, t=t, s=s, c=c, h=harmonic(t, s, c)))
    n = len(rows)
    if n == 0:
        raise ValueError("nothing to evaluate: empty ground truth")
    return ScoreReport(
        rows=rows,
        mean_t=sum(r.t for r in rows) / n,
        mean_s=sum(r.s for r in rows) / n,
        mean_c=sum(r.c for r in rows) / n,
        mean_h=sum(r.h for r in rows) / n,
    )


def read_predictions(path: Path | str) -> list[Prediction]:
    """Read a prediction or ground-truth CSV with the shared schema."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PREDICTION_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(PREDICTION_HEADER)}, "
                f"got {reader.fieldnames}"
            )
        out = []
        for line_no, row in enumerate(reader, start=2):
            try:
                out.append(
                    Prediction(
                        video_id=row["video_id"],
                        time_sec=float(row["time_sec"]),
                        cx=float(row["cx"]),
                        cy=float(row["cy"]),
                        label=row["class"],
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
    return out


def write_predictions(preds: list[Prediction], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTION_HEADER)
        for p in preds:
            writer.writerow(
                [p.video_id, f"{p.time_sec:.6f}", f"{p.cx:.6f}", f"{p.cy:.6f}", p.label]
            )


def write_report_csv(report: ScoreReport, path: Path | str) -> None:
    """Per-video component scores plus a final MEAN row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "T", "S", "C", "H"])
        for r in report.rows:
            writer.writerow([r.video_id, f"{r.t:.6f}", f"{r.s:.6f}", f"{r.c:.6f}", f"{r.h:.6f}"])
        writer.writerow(
            [
                "MEAN",
                f"{report.mean_t:.6f}",
                f"{report.mean_s:.6f}",
                f"{report.mean_c:.6f}",
                f"{report.mean_h:.6f}",
            ]
        )


def report_as_dict(report: ScoreReport) -> dict:
    return {
        "videos": [
            {"video_id": r.video_id, "T": r.t, "S": r.s, "C": r.c, "H": r.h}
            for r in report.rows
        ],
        "mean": {
            "T": report.mean_t,
            "S": report.mean_s,
            "C": report.mean_c,
            "H": report.mean_h,
        },
    }


def write_report_json(report: ScoreReport, path: Path | str) -> None:
    Path(path).write_text(json.dumps(report_as_dict(report), indent=2) + "\n", encoding="utf-8")
