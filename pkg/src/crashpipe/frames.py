"""Grayscale frame and clip loading.

Frames travel through the pipeline as real-valued row-major intensity
grids so differencing and flow arithmetic lose no precision. Input is a
binary PGM (P5) sequence described by a JSON manifest:

    {"id": "<string>", "fps": <number>, "frames": ["<path>", ...]}

with frame paths resolved relative to the manifest file. All types are
immutable after construction; operations are pure functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GrayFrame",
    "Clip",
    "ClipManifest",
    "PgmParseError",
    "ManifestError",
    "load_pgm",
    "pgm_bytes",
    "save_pgm",
    "luma_from_rgb",
    "resize_bilinear",
    "load_manifest",
    "load_clip",
]


class PgmParseError(ValueError):
    """Raised when a byte stream does not parse as an 8-bit binary P5 image."""


class ManifestError(ValueError):
    """Raised when a clip manifest is malformed or its frames do not load."""


@dataclass(eq=False)
class GrayFrame:
    """A single grayscale image, values in [0, 255], stored as float64."""

    width: int
    height: int
    data: np.ndarray  # shape (height, width)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if self.data.shape != (self.height, self.width):
            raise ValueError(
                f"frame data shape {self.data.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("frame data contains non-finite values")
        lo, hi = float(self.data.min()), float(self.data.max())
        if lo < 0.0 or hi > 255.0:
            raise ValueError(f"frame values outside [0, 255]: min={lo}, max={hi}")
        self.data.setflags(write=False)

    @classmethod
    def from_array(cls, data: np.ndarray) -> "GrayFrame":
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D intensity grid, got shape {data.shape}")
        return cls(width=data.shape[1], height=data.shape[0], data=data)


@dataclass(eq=False)
class Clip:
    """An ordered grayscale frame sequence with its frame rate."""

    frames: list[GrayFrame]
    fps: float
    id: str = ""

    def __post_init__(self) -> None:
        if len(self.frames) < 2:
            raise ValueError(f"clip '{self.id}' needs at least 2 frames, got {len(self.frames)}")
        if self.fps <= 0:
            raise ValueError(f"clip '{self.id}' fps must be positive, got {self.fps}")
        w, h = self.frames[0].width, self.frames[0].height
        for i, f in enumerate(self.frames):
            if (f.width, f.height) != (w, h):
                raise ValueError(
                    f"clip '{self.id}' frame {i} is {f.width}x{f.height}, expected {w}x{h}"
                )

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


@dataclass
class ClipManifest:
    """Frame-file listing for one video. Paths are already resolved."""

    fps: float
    frame_files: list[Path]
    id: str

    def __post_init__(self) -> None:
        if not self.frame_files:
            raise ManifestError(f"manifest '{self.id}' lists no frames")
        if self.fps <= 0:
            raise ManifestError(f"manifest '{self.id}' fps must be positive, got {self.fps}")


def load_pgm(data: bytes) -> GrayFrame:
    """Parse an 8-bit binary PGM (P5, maxval 255) byte stream."""
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PgmParseError("truncated PGM header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise PgmParseError(f"not a binary PGM: magic {magic!r}, expected b'P5'")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise PgmParseError(f"malformed PGM header: {exc}") from exc
    if width < 1 or height < 1:
        raise PgmParseError(f"invalid PGM dimensions {width}x{height}")
    if maxval != 255:
        raise PgmParseError(f"unsupported PGM maxval {maxval}, only 255 is handled")
    pos += 1  # single whitespace byte after maxval
    expected = width * height
    raster = data[pos : pos + expected]
    if len(raster) < expected:
        raise PgmParseError(
            f"truncated PGM raster: expected {expected} bytes, found {len(raster)}"
        )
    grid = np.frombuffer(raster, dtype=np.uint8).astype(np.float64).reshape(height, width)
    return GrayFrame(width=width, height=height, data=grid)


def pgm_bytes(frame: GrayFrame) -> bytes:
    """Serialize a frame as binary PGM, rounding to 8-bit."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    raster = np.clip(np.rint(frame.data), 0, 255).astype(np.uint8).tobytes()
    return header + raster


def save_pgm(frame: GrayFrame, path: Path | str) -> None:
    Path(path).write_bytes(pgm_bytes(frame))


def luma_from_rgb(r: float, g: float, b: float) -> float:
    """Rec. 601 luma from 8-bit RGB components, clamped to [0, 255]."""
    y = 0.299 * r + 0.587 * g + 0.114 * b
    return min(255.0, max(0.0, y))


def _bilinear_sample(grid: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample ``grid`` at float coordinates, clamped to the image bounds.

    ``xs`` are column coordinates, ``ys`` row coordinates; both arrays share
    a shape, which is also the output shape.
    """
    h, w = grid.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = grid[y0, x0] * (1.0 - fx) + grid[y0, x1] * fx
    bot = grid[y1, x0] * (1.0 - fx) + grid[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resize_bilinear(frame: GrayFrame, out_w: int, out_h: int) -> GrayFrame:
    """Bilinear resize with pixel-center alignment.

    Source coordinate for output pixel d is (d + 0.5) * in/out - 0.5, clamped
    to the image bounds, which makes resizing to the same size an exact
    identity.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be positive, got {out_w}x{out_h}")
    if out_w == frame.width and out_h == frame.height:
        return frame
    sx = frame.width / out_w
    sy = frame.height / out_h
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * sy - 0.5
    grid_x, grid_y = np.meshgrid(xs, ys)
    out = _bilinear_sample(frame.data, grid_x, grid_y)
    # Convex combinations stay within the input range; clip off float dust.
    np.clip(out, frame.data.min(), frame.data.max(), out=out)
    return GrayFrame(width=out_w, height=out_h, data=out)


def load_manifest(path: Path | str) -> ClipManifest:
    """Load a manifest JSON file, resolving frame paths against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("id", "fps", "frames"):
        if key not in raw:
            raise ManifestError(f"manifest {path} is missing key '{key}'")
    if not isinstance(raw["frames"], list):
        raise ManifestError(f"manifest {path}: 'frames' must be a list of paths")
    base = path.parent
    files = [base / f for f in raw["frames"]]
    return ClipManifest(fps=float(raw["fps"]), frame_files=files, id=str(raw["id"]))


def load_clip(manifest: ClipManifest) -> Clip:
    """Load every frame listed in the manifest, in order."""
    frames: list[GrayFrame] = []
    for i, file in enumerate(manifest.frame_files):
        try:
            frame = load_pgm(Path(file).read_bytes())
        except (OSError, PgmParseError) as exc:
            raise ManifestError(f"clip '{manifest.id}' frame {i} ({file}): {exc}") from exc
        if frames and (frame.width, frame.height) != (frames[0].width, frames[0].height):
            raise ManifestError(
                f"clip '{manifest.id}' frame {i} ({file}) is "
                f"{frame.width}x{frame.height}, expected "
                f"{frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    try:
        return Clip(frames=frames, fps=manifest.fps, id=manifest.id)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc
