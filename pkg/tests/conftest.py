from __future__ import annotations

import numpy as np
import pytest

from crashpipe.flow import _resize_array
from crashpipe.frames import Clip, GrayFrame


def frame_of(rows) -> GrayFrame:
    """GrayFrame from a nested list or array."""
    return GrayFrame.from_array(np.asarray(rows, dtype=np.float64))


def constant_clip(value: float, n: int, w: int = 8, h: int = 6, fps: float = 20.0) -> Clip:
    frames = [frame_of(np.full((h, w), value)) for _ in range(n)]
    return Clip(frames=frames, fps=fps, id="const")


def blob_texture(rng: np.random.Generator, width: int, height: int, pad: int = 8) -> np.ndarray:
    """Smooth random texture with a padding margin for exact-shift crops."""
    coarse = rng.uniform(0.0, 1.0, ((height + 2 * pad) // 8 + 2, (width + 2 * pad) // 8 + 2))
    return _resize_array(coarse, width + 2 * pad, height + 2 * pad) * 200.0 + 20.0


def shifted_pair(
    rng: np.random.Generator, width: int, height: int, dx: int, dy: int, pad: int = 8
) -> tuple[GrayFrame, GrayFrame]:
    """Two frames where the second is the first translated by (dx, dy) pixels."""
    assert abs(dx) <= pad and abs(dy) <= pad
    tex = blob_texture(rng, width, height, pad)
    a = tex[pad : pad + height, pad : pad + width]
    b = tex[pad - dy : pad - dy + height, pad - dx : pad - dx + width]
    return GrayFrame.from_array(a), GrayFrame.from_array(b)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
