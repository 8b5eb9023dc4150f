"""Impact-point localization from accumulated optical flow.

Flow magnitudes are summed over a frame window centered on the detected
collision (or anchored at one third of the clip when no detection is
available), thresholded at a percentile to suppress diffuse background
motion, and reduced to a normalized weighted centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flow import FlowParams, estimate_flow, flow_magnitude
from .frames import Clip, resize_bilinear

__all__ = [
    "SpatialConfig",
    "MagnitudeMap",
    "ImpactPoint",
    "select_window",
    "accumulate_magnitude",
    "percentile_threshold",
    "weighted_centroid",
    "localize_impact",
]


@dataclass
class SpatialConfig:
    window_frames: int = 30  # frames of context around the peak
    percentile: float = 90.0
    flow: FlowParams = field(default_factory=FlowParams)
    mass_eps: float = 1e-6  # below this total mass, fall back to the center
    work_width: int = 320
    work_height: int = 180

    def __post_init__(self) -> None:
        if self.window_frames < 2:
            raise ValueError(f"window_frames must be >= 2, got {self.window_frames}")
        if not 0.0 < self.percentile < 100.0:
            raise ValueError(f"percentile must be in (0, 100), got {self.percentile}")


@dataclass(eq=False)
class MagnitudeMap:
    """Accumulated per-pixel flow magnitudes over a frame window."""

    width: int
    height: int
    m: np.ndarray

    def __post_init__(self) -> None:
        self.m = np.asarray(self.m, dtype=np.float64)
        if self.m.shape != (self.height, self.width):
            raise ValueError(
                f"magnitude shape {self.m.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if not np.all(np.isfinite(self.m)):
            raise ValueError("magnitude map contains non-finite values")
        if np.any(self.m < 0):
            raise ValueError("magnitude map contains negative values")


@dataclass(frozen=True)
class ImpactPoint:
    cx: float  # normalized column in [0, 1]
    cy: float  # normalized row in [0, 1]
    fallback: bool = False  # True when the frame-center default was returned


def select_window(
    n_frames: int, peak_frame: int | None, cfg: SpatialConfig | None = None
) -> range:
    """Frame index range the flow accumulation runs over.

    With a peak the window is centered on it and clamp-shifted to keep its
    full length whenever the clip allows; without one it starts at a third
    of the clip and is clamped.
    """
    cfg = cfg or SpatialConfig()
    if n_frames < 2:
        raise ValueError(f"need at least 2 frames, got {n_frames}")
    t = cfg.window_frames
    if peak_frame is not None:
        start = peak_frame - t // 2
        start = min(start, n_frames - t)
        start = max(start, 0)
        stop = min(start + t, n_frames)
    else:
        start = n_frames // 3
        stop = min(start + t, n_frames)
    return range(start, stop)


def accumulate_magnitude(
    clip: Clip, window: range, cfg: SpatialConfig | None = None
) -> MagnitudeMap:
    """Sum flow magnitudes over consecutive frame pairs in the window."""
    cfg = cfg or SpatialConfig()
    indices = list(window)
    if not indices or indices[0] < 0 or indices[-1] >= clip.n_frames:
        raise ValueError(f"window {window} is outside the clip's {clip.n_frames} frames")
    resized = [
        resize_bilinear(clip.frames[i], cfg.work_width, cfg.work_height)
        for i in indices
    ]
    total = np.zeros((cfg.work_height, cfg.work_width))
    for a, b in zip(resized, resized[1:]):
        total += flow_magnitude(estimate_flow(a, b, cfg.flow))
    return MagnitudeMap(width=cfg.work_width, height=cfg.work_height, m=total)


def percentile_threshold(magmap: MagnitudeMap, p: float) -> MagnitudeMap:
    """Zero out entries strictly below the nearest-rank p-th percentile.

    The threshold is the value at 1-based rank ceil(p/100 * n) of the
    ascending sort; entries equal to it survive.
    """
    if not 0.0 < p < 100.0:
        raise ValueError(f"percentile must be in (0, 100), got {p}")
    flat = np.sort(magmap.m, axis=None)
    rank = math.ceil(p / 100.0 * flat.size)
    theta = flat[max(rank - 1, 0)]
    kept = np.where(magmap.m < theta, 0.0, magmap.m)
    return MagnitudeMap(width=magmap.width, height=magmap.height, m=kept)


def weighted_centroid(magmap: MagnitudeMap, mass_eps: float = 1e-6) -> ImpactPoint:
    """Mass-weighted mean pixel coordinate, normalized by the map dimensions.

    Returns the frame center with the fallback flag set when the total mass
    is below ``mass_eps``.
    """
    total = float(magmap.m.sum())
    if total < mass_eps:
        return ImpactPoint(cx=0.5, cy=0.5, fallback=True)
    rows = np.arange(magmap.height, dtype=np.float64)
    cols = np.arange(magmap.width, dtype=np.float64)
    cx = float((magmap.m * cols[None, :]).sum()) / (magmap.width * total)
    cy = float((magmap.m * rows[:, None]).sum()) / (magmap.height * total)
    return ImpactPoint(cx=cx, cy=cy, fallback=False)


def localize_impact(
    clip: Clip, peak_frame: int | None, cfg: SpatialConfig | None = None
) -> ImpactPoint:
    """Full spatial pass: window -> accumulated flow -> threshold -> centroid."""
    cfg = cfg or SpatialConfig()
    window = select_window(clip.n_frames, peak_frame, cfg)
    magmap = accumulate_magnitude(clip, window, cfg)
    return weighted_centroid(percentile_threshold(magmap, cfg.percentile), cfg.mass_eps)
