"""Collision-frame detection from frame differences.

The signal path is: per-pair mean absolute frame difference, centered
rolling-mean smoothing, z-score normalization against the whole series,
then thresholded peak selection with a global-argmax fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import Clip, resize_bilinear

__all__ = [
    "DetectorConfig",
    "DiffSeries",
    "ZScoreSeries",
    "TemporalResult",
    "frame_diff_series",
    "rolling_mean",
    "zscore",
    "detect_peak",
    "locate_accident",
]


@dataclass
class DetectorConfig:
    window: int = 5  # centered smoothing width, odd
    threshold: float = 1.5  # z-score crossing level
    eps: float = 1e-8  # regularizer added to sigma
    work_width: int = 320
    work_height: int = 180

    def __post_init__(self) -> None:
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"smoothing window must be odd and >= 1, got {self.window}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.work_width < 1 or self.work_height < 1:
            raise ValueError("working resolution must be positive")


@dataclass(eq=False)
class DiffSeries:
    """Mean absolute differences between adjacent frames; length N-1."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("difference series must be a non-empty 1-D array")
        if np.any(self.values < 0):
            raise ValueError("difference series contains negative values")


@dataclass(eq=False)
class ZScoreSeries:
    """Smoothed difference signal standardized by its own statistics."""

    values: np.ndarray
    mu: float
    sigma: float
    eps: float = 1e-8


@dataclass(frozen=True)
class TemporalResult:
    peak_frame: int
    time_sec: float
    thresholded: bool  # True when a z-score actually crossed the threshold


def frame_diff_series(clip: Clip, cfg: DetectorConfig | None = None) -> DiffSeries:
    """Mean absolute difference between adjacent frames at the working resolution."""
    cfg = cfg or DetectorConfig()
    resized = [
        resize_bilinear(f, cfg.work_width, cfg.work_height).data for f in clip.frames
    ]
    diffs = np.empty(len(resized) - 1, dtype=np.float64)
    for t in range(len(resized) - 1):
        diffs[t] = np.mean(np.abs(resized[t + 1] - resized[t]))
    return DiffSeries(values=diffs)


def rolling_mean(series: DiffSeries | np.ndarray, window: int) -> np.ndarray:
    """Centered rolling mean; windows truncate at the boundaries.

    Each output value averages the inputs within half-width ``window // 2``,
    normalized by however many indices actually fall inside the series.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    values = series.values if isinstance(series, DiffSeries) else np.asarray(series, dtype=np.float64)
    if window == 1:
        return values.copy()
    n = values.size
    half = window // 2
    prefix = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    return (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1)


def zscore(smoothed: np.ndarray, eps: float = 1e-8) -> ZScoreSeries:
    """Standardize against the series-wide mean and population standard deviation."""
    smoothed = np.asarray(smoothed, dtype=np.float64)
    if smoothed.size == 0:
        raise ValueError("cannot z-score an empty series")
    mu = float(np.mean(smoothed))
    sigma = float(np.std(smoothed))  # population form (divide by n)
    z = (smoothed - mu) / (sigma + eps)
    return ZScoreSeries(values=z, mu=mu, sigma=sigma, eps=eps)


def detect_peak(z: ZScoreSeries | np.ndarray, tau: float) -> tuple[int, bool]:
    """Strongest anomaly among threshold crossers, else the global maximum.

    Returns (index, thresholded). Ties break toward the smallest index.
    """
    values = z.values if isinstance(z, ZScoreSeries) else np.asarray(z, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot detect a peak in an empty series")
    above = values > tau
    if above.any():
        candidates = np.flatnonzero(above)
        return int(candidates[np.argmax(values[candidates])]), True
    return int(np.argmax(values)), False


def locate_accident(clip: Clip, cfg: DetectorConfig | None = None) -> TemporalResult:
    """Full temporal pass: diff series -> smoothing -> z-scores -> peak."""
    cfg = cfg or DetectorConfig()
    diffs = frame_diff_series(clip, cfg)
    smoothed = rolling_mean(diffs, cfg.window)
    z = zscore(smoothed, cfg.eps)
    peak, thresholded = detect_peak(z, cfg.threshold)
    return TemporalResult(
        peak_frame=peak, time_sec=peak / clip.fps, thresholded=thresholded
    )
