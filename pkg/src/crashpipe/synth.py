"""Deterministic synthetic collision clips with known ground truth.

Clips show uniform-intensity blocks translating linearly over a static
textured background; at the collision frame every block freezes and a
2-frame brightness flash marks the impact neighborhood. The flash
guarantees the raw frame-difference series peaks at the collision, and
the linear motion makes the true impact point and flow field known, so
generated clips serve as oracles for the detector, the localizer, and
(via constructed banks) the classifier.

Everything is drawn from a seeded generator: identical specs produce
bit-identical clips.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import _resize_array
from .frames import Clip, GrayFrame
from .scoring import Prediction as GroundTruth
from .taxonomy import CLASS_ORDER, canonical_class

__all__ = [
    "BlockActor",
    "SceneSpec",
    "GroundTruth",
    "generate_clip",
    "suite_specs",
    "generate_suite",
]


@dataclass
class BlockActor:
    """A solid rectangle translating linearly until the collision frame."""

    x: float  # top-left at frame 0, pixels
    y: float
    vx: float  # pixels per frame
    vy: float
    width: int
    height: int
    intensity: float

    def position(self, frame_index: int, collision_frame: int) -> tuple[int, int]:
        t = min(frame_index, collision_frame)
        return int(round(self.x + self.vx * t)), int(round(self.y + self.vy * t))


@dataclass
class SceneSpec:
    width: int
    height: int
    fps: float
    n_frames: int
    collision_frame: int
    impact: tuple[float, float]  # normalized (cx, cy)
    class_label: str
    actors: list[BlockActor] = field(default_factory=list)
    flash_amplitude: float = 60.0
    noise_sigma: float = 2.0
    seed: int = 0
    id: str = "synthetic"

    def __post_init__(self) -> None:
        self.class_label = canonical_class(self.class_label)
        if self.n_frames < 3:
            raise ValueError(f"need at least 3 frames, got {self.n_frames}")
        if not 1 <= self.collision_frame <= self.n_frames - 2:
            raise ValueError(
                f"collision_frame {self.collision_frame} outside "
                f"[1, {self.n_frames - 2}]"
            )
        if not (0.0 <= self.impact[0] <= 1.0 and 0.0 <= self.impact[1] <= 1.0):
            raise ValueError(f"impact {self.impact} outside [0, 1]^2")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        for i, actor in enumerate(self.actors):
            for t in (0, self.collision_frame):
                px, py = actor.position(t, self.collision_frame)
                if not (0 <= px and px + actor.width <= self.width):
                    raise ValueError(f"actor {i} leaves frame bounds horizontally at frame {t}")
                if not (0 <= py and py + actor.height <= self.height):
                    raise ValueError(f"actor {i} leaves frame bounds vertically at frame {t}")


def _background(spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    """Static smooth texture plus pixel noise, fixed for the whole clip."""
    coarse_w = max(2, spec.width // 16)
    coarse_h = max(2, spec.height // 16)
    coarse = rng.uniform(30.0, 130.0, size=(coarse_h, coarse_w))
    texture = _resize_array(coarse, spec.width, spec.height)
    noise = rng.normal(0.0, spec.noise_sigma, size=(spec.height, spec.width))
    return np.clip(texture + noise, 0.0, 255.0)


def _flash_mask(spec: SceneSpec) -> np.ndarray:
    # Wide enough that the flash transient dominates block-motion differences
    # even when it partially saturates on a bright block.
    radius = max(4, round(0.1 * min(spec.width, spec.height)))
    cx = spec.impact[0] * spec.width
    cy = spec.impact[1] * spec.height
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2


def generate_clip(spec: SceneSpec) -> tuple[Clip, GroundTruth]:
    """Render the scene and return it with its ground-truth annotation."""
    rng = np.random.default_rng(spec.seed)
    background = _background(spec, rng)
    flash = _flash_mask(spec)

    frames = []
    for t in range(spec.n_frames):
        img = background.copy()
        for actor in spec.actors:
            px, py = actor.position(t, spec.collision_frame)
            img[py : py + actor.height, px : px + actor.width] = actor.intensity
        if t in (spec.collision_frame, spec.collision_frame + 1):
            img[flash] += spec.flash_amplitude
        np.clip(img, 0.0, 255.0, out=img)
        frames.append(GrayFrame(width=spec.width, height=spec.height, data=img))

    gt = GroundTruth(
        video_id=spec.id,
        time_sec=spec.collision_frame / spec.fps,
        cx=spec.impact[0],
        cy=spec.impact[1],
        label=spec.class_label,
    )
    return Clip(frames=frames, fps=spec.fps, id=spec.id), gt


def _capped_speed(wanted: float, available_px: float, n_frames: int) -> float:
    """Largest usable speed that keeps the whole approach inside the frame."""
    return max(0.0, min(wanted, available_px / n_frames))


def _stage_actors(
    label: str,
    width: int,
    height: int,
    impact_px: tuple[float, float],
    collision_frame: int,
    rng: np.random.Generator,
) -> list[BlockActor]:
    """Place blocks so their contact at the collision frame is the impact point.

    The class labels are geometric conventions (approach angles), not claims
    of visual realism.
    """
    ix, iy = impact_px
    k = collision_frame
    s = int(rng.integers(16, 25))
    bright = float(rng.integers(170, 231))
    dark = float(rng.integers(0, 25))
    margin = 2.0

    def from_left(final_x: float, final_y: float, speed: float, intensity: float) -> BlockActor:
        v = _capped_speed(speed, final_x - margin, k)
        return BlockActor(x=final_x - v * k, y=final_y, vx=v, vy=0.0, width=s, height=s, intensity=intensity)

    def from_right(final_x: float, final_y: float, speed: float) -> BlockActor:
        v = _capped_speed(speed, width - margin - s - final_x, k)
        return BlockActor(x=final_x + v * k, y=final_y, vx=-v, vy=0.0, width=s, height=s, intensity=dark)

    def from_top(final_x: float, final_y: float, speed: float) -> BlockActor:
        v = _capped_speed(speed, final_y - margin, k)
        return BlockActor(x=final_x, y=final_y - v * k, vx=0.0, vy=v, width=s, height=s, intensity=dark)

    speed_a = float(rng.uniform(0.6, 1.4))
    speed_b = float(rng.uniform(0.6, 1.4))

    if label == "head-on":
        return [
            from_left(ix - s, iy - s / 2, speed_a, bright),
            from_right(ix, iy - s / 2, speed_b),
        ]
    if label == "rear-end":
        # Both travel rightward; the rear block closes the gap exactly at k.
        rear = from_left(ix - s, iy - s / 2, max(speed_a, speed_b), dark)
        front = BlockActor(
            x=ix - 0.4 * rear.vx * k,
            y=iy - s / 2,
            vx=0.4 * rear.vx,
            vy=0.0,
            width=s,
            height=s,
            intensity=bright,
        )
        return [front, rear]
    if label == "sideswipe":
        # Opposite directions, vertically adjacent lanes grazing at impact.
        top = from_left(ix - s + 2, iy - s, speed_a, bright)
        bottom = from_right(ix - 2, iy, speed_b)
        return [top, bottom]
    if label == "single":
        wall_w = max(6, s // 3)
        wall = BlockActor(
            x=ix, y=iy - s, vx=0.0, vy=0.0, width=wall_w, height=2 * s, intensity=dark
        )
        return [from_left(ix - s, iy - s / 2, speed_a, bright), wall]
    if label == "t-bone":
        return [
            from_left(ix - s, iy - s / 2, speed_a, bright),
            from_top(ix - s / 2, iy - s, speed_b),
        ]
    raise ValueError(f"unknown class label '{label}'")


def suite_specs(seed: int, count: int) -> list[SceneSpec]:
    """Deterministic scene specs cycling through the five classes.

    Collision times span 3-12 s; impact points vary over the central frame
    region. Clips are rendered at the pipeline's working resolution.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    width, height, fps = 320, 180, 20.0
    specs = []
    for i in range(count):
        label = CLASS_ORDER[i % len(CLASS_ORDER)]
        collision_frame = int(round(rng.uniform(3.0, 12.0) * fps))
        n_frames = collision_frame + int(rng.integers(40, 61))
        impact = (float(rng.uniform(0.3, 0.7)), float(rng.uniform(0.3, 0.7)))
        impact_px = (impact[0] * width, impact[1] * height)
        actors = _stage_actors(label, width, height, impact_px, collision_frame, rng)
        specs.append(
            SceneSpec(
                width=width,
                height=height,
                fps=fps,
                n_frames=n_frames,
                collision_frame=collision_frame,
                impact=impact,
                class_label=label,
                actors=actors,
                seed=int(rng.integers(0, 2**31)),
                id=f"clip-{i:03d}",
            )
        )
    return specs


def generate_suite(seed: int, count: int) -> list[tuple[Clip, GroundTruth]]:
    """Render a whole suite. For large counts prefer iterating suite_specs
    and rendering one clip at a time; frames are float arrays and add up."""
    return [generate_clip(spec) for spec in suite_specs(seed, count)]
