"""Dense optical flow between grayscale frames, built from scratch.

Each frame is modeled per pixel as a local quadratic f(x) ~ x'Ax + b'x + c
fitted over a Gaussian-weighted neighborhood (polynomial expansion). The
displacement relating two frames' coefficients is solved per pixel from a
2x2 system aggregated over a box window, refined iteratively and
coarse-to-fine over a Gaussian pyramid.

Convention: x is the column offset, y the row offset, so b[0] multiplies
horizontal position and fx is horizontal displacement in pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d, uniform_filter

from .frames import GrayFrame, _bilinear_sample

__all__ = [
    "FlowParams",
    "PolyExpansion",
    "FlowField",
    "poly_expansion",
    "warp_frame",
    "flow_level",
    "estimate_flow",
    "flow_magnitude",
]

# 5-tap binomial low-pass applied before each pyramid downscale.
_PYR_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass
class FlowParams:
    pyr_scale: float = 0.5
    levels: int = 3
    winsize: int = 15
    iterations: int = 3
    poly_n: int = 5
    poly_sigma: float = 1.2

    def __post_init__(self) -> None:
        if not 0.0 < self.pyr_scale < 1.0:
            raise ValueError(f"pyr_scale must be in (0, 1), got {self.pyr_scale}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.winsize < 3 or self.winsize % 2 == 0:
            raise ValueError(f"winsize must be odd and >= 3, got {self.winsize}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.poly_n not in (5, 7):
            raise ValueError(f"poly_n must be 5 or 7, got {self.poly_n}")
        if self.poly_sigma <= 0:
            raise ValueError(f"poly_sigma must be positive, got {self.poly_sigma}")


@dataclass(eq=False)
class PolyExpansion:
    """Per-pixel quadratic-model coefficients over the frame grid."""

    width: int
    height: int
    b: np.ndarray  # (h, w, 2) linear terms
    a: np.ndarray  # (h, w, 2, 2) symmetric quadratic terms
    c: np.ndarray  # (h, w) constant term


@dataclass(eq=False)
class FlowField:
    """Per-pixel displacement in pixels; fx horizontal, fy vertical."""

    width: int
    height: int
    fx: np.ndarray
    fy: np.ndarray

    def __post_init__(self) -> None:
        self.fx = np.asarray(self.fx, dtype=np.float64)
        self.fy = np.asarray(self.fy, dtype=np.float64)
        shape = (self.height, self.width)
        if self.fx.shape != shape or self.fy.shape != shape:
            raise ValueError(
                f"flow component shapes {self.fx.shape}/{self.fy.shape} "
                f"do not match {shape}"
            )
        if not (np.all(np.isfinite(self.fx)) and np.all(np.isfinite(self.fy))):
            raise ValueError("flow field contains non-finite values")

    @classmethod
    def zeros(cls, width: int, height: int) -> "FlowField":
        return cls(
            width=width,
            height=height,
            fx=np.zeros((height, width)),
            fy=np.zeros((height, width)),
        )


def _applicability(poly_n: int, poly_sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """1-D offsets and normalized Gaussian weights for a poly_n-wide window."""
    r = poly_n // 2
    offsets = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(offsets**2) / (2.0 * poly_sigma**2))
    return offsets, g / g.sum()


def poly_expansion(frame: GrayFrame, poly_n: int = 5, poly_sigma: float = 1.2) -> PolyExpansion:
    """Fit the local quadratic model at every pixel.

    The fit is the Gaussian-weighted least squares over the poly_n x poly_n
    neighborhood, computed with separable correlations (reflect-101 borders)
    followed by the precomputed inverse of the normal-equation matrix.
    """
    if frame.width < poly_n or frame.height < poly_n:
        raise ValueError(
            f"frame {frame.width}x{frame.height} is smaller than the "
            f"{poly_n}x{poly_n} expansion neighborhood"
        )
    offsets, g = _applicability(poly_n, poly_sigma)
    xg = offsets * g
    xxg = offsets**2 * g

    img = frame.data
    # Vertical passes produce the y-moments; horizontal passes complete the
    # projections onto the basis [1, x, y, x^2, y^2, xy].
    v0 = correlate1d(img, g, axis=0, mode="mirror")
    v1 = correlate1d(img, xg, axis=0, mode="mirror")
    v2 = correlate1d(img, xxg, axis=0, mode="mirror")
    proj = np.stack(
        [
            correlate1d(v0, g, axis=1, mode="mirror"),  # 1
            correlate1d(v0, xg, axis=1, mode="mirror"),  # x
            correlate1d(v1, g, axis=1, mode="mirror"),  # y
            correlate1d(v0, xxg, axis=1, mode="mirror"),  # x^2
            correlate1d(v2, g, axis=1, mode="mirror"),  # y^2
            correlate1d(v1, xg, axis=1, mode="mirror"),  # xy
        ]
    )

    # Normal-equation matrix of the weighted basis over the 2-D window.
    wx, wy = np.meshgrid(offsets, offsets)
    w2d = np.outer(g, g).ravel()
    basis = np.stack(
        [
            np.ones_like(wx).ravel(),
            wx.ravel(),
            wy.ravel(),
            (wx**2).ravel(),
            (wy**2).ravel(),
            (wx * wy).ravel(),
        ]
    )
    gram = (basis * w2d) @ basis.T
    coef = np.einsum("kj,jhw->khw", np.linalg.inv(gram), proj)

    b = np.stack([coef[1], coef[2]], axis=-1)
    a = np.empty((frame.height, frame.width, 2, 2))
    a[..., 0, 0] = coef[3]
    a[..., 1, 1] = coef[4]
    a[..., 0, 1] = coef[5] / 2.0
    a[..., 1, 0] = coef[5] / 2.0
    return PolyExpansion(width=frame.width, height=frame.height, b=b, a=a, c=coef[0])


def warp_frame(frame: GrayFrame, flow: FlowField) -> GrayFrame:
    """Sample the frame at p + flow(p) with clamped bilinear interpolation."""
    if (flow.width, flow.height) != (frame.width, frame.height):
        raise ValueError(
            f"flow {flow.width}x{flow.height} does not match "
            f"frame {frame.width}x{frame.height}"
        )
    ys, xs = np.mgrid[0 : frame.height, 0 : frame.width].astype(np.float64)
    out = _bilinear_sample(frame.data, xs + flow.fx, ys + flow.fy)
    np.clip(out, frame.data.min(), frame.data.max(), out=out)
    return GrayFrame(width=frame.width, height=frame.height, data=out)


def _gather_bilinear(channels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Clamped bilinear sampling of several stacked channels at shared coords.

    ``channels`` is (k, h, w); the index and weight computation is done once
    and applied to every channel, which is what makes the iterative warping
    affordable.
    """
    k, h, w = channels.shape
    xs = np.clip(xs, 0.0, w - 1.0).ravel()
    ys = np.clip(ys, 0.0, h - 1.0).ravel()
    x0 = xs.astype(np.intp)  # values are non-negative, truncation == floor
    y0 = ys.astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    flat = channels.reshape(k, h * w)
    i00 = y0 * w + x0
    i01 = y0 * w + x1
    i10 = y1 * w + x0
    i11 = y1 * w + x1
    out = flat[:, i00] * ((1.0 - fx) * (1.0 - fy))
    out += flat[:, i01] * (fx * (1.0 - fy))
    out += flat[:, i10] * ((1.0 - fx) * fy)
    out += flat[:, i11] * (fx * fy)
    return out.reshape(k, h, w)


def flow_level(
    expA: PolyExpansion,
    expB: PolyExpansion,
    prior: FlowField,
    winsize: int = 15,
    iterations: int = 3,
) -> FlowField:
    """Refine a displacement prior from two polynomial expansions.

    Each pass resamples the second expansion at the displaced positions,
    averages the quadratic coefficients, aggregates the per-pixel normal
    equations over a winsize box, and solves the 2x2 system. Pixels whose
    aggregated system is near-singular keep their prior displacement.
    """
    if (expA.width, expA.height) != (expB.width, expB.height):
        raise ValueError("polynomial expansions do not share dimensions")
    if (prior.width, prior.height) != (expA.width, expA.height):
        raise ValueError("prior flow does not match the expansion grid")
    h, w = expA.height, expA.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)

    a1xx = expA.a[..., 0, 0]
    a1xy = expA.a[..., 0, 1]
    a1yy = expA.a[..., 1, 1]
    b1x = expA.b[..., 0]
    b1y = expA.b[..., 1]
    coeffs_b = np.stack(
        [expB.b[..., 0], expB.b[..., 1], expB.a[..., 0, 0], expB.a[..., 0, 1], expB.a[..., 1, 1]]
    )

    dx = prior.fx.copy()
    dy = prior.fy.copy()
    for _ in range(iterations):
        b2x, b2y, a2xx, a2xy, a2yy = _gather_bilinear(coeffs_b, xs + dx, ys + dy)
        axx = 0.5 * (a1xx + a2xx)
        axy = 0.5 * (a1xy + a2xy)
        ayy = 0.5 * (a1yy + a2yy)

        dbx = 0.5 * (b1x - b2x) + axx * dx + axy * dy
        dby = 0.5 * (b1y - b2y) + axy * dx + ayy * dy

        g11 = uniform_filter(axx * axx + axy * axy, size=winsize, mode="mirror")
        g12 = uniform_filter(axy * (axx + ayy), size=winsize, mode="mirror")
        g22 = uniform_filter(axy * axy + ayy * ayy, size=winsize, mode="mirror")
        h1 = uniform_filter(axx * dbx + axy * dby, size=winsize, mode="mirror")
        h2 = uniform_filter(axy * dbx + ayy * dby, size=winsize, mode="mirror")

        det = g11 * g22 - g12 * g12
        trace = g11 + g22
        # Relative guard for ill-conditioned systems plus an absolute floor:
        # gradient-free (flat) regions leave only float dust in G, which the
        # scale-invariant test alone would happily "solve".
        solvable = (det > 1e-9 * trace * trace) & (trace > 1e-12)
        safe_det = np.where(solvable, det, 1.0)
        dx = np.where(solvable, (g22 * h1 - g12 * h2) / safe_det, dx)
        dy = np.where(solvable, (g11 * h2 - g12 * h1) / safe_det, dy)

    return FlowField(width=w, height=h, fx=dx, fy=dy)


def _resize_array(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Center-aligned bilinear resize of a raw 2-D array (no range clipping)."""
    h, w = arr.shape
    if (w, h) == (out_w, out_h):
        return arr.copy()
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return _bilinear_sample(arr, gx, gy)


def _pyramid_dims(width: int, height: int, params: FlowParams) -> list[tuple[int, int]]:
    """Level dimensions, finest first, capped so the coarsest fits poly_n."""
    dims = [(width, height)]
    for _ in range(1, params.levels):
        nw = math.ceil(dims[-1][0] * params.pyr_scale)
        nh = math.ceil(dims[-1][1] * params.pyr_scale)
        if nw < params.poly_n or nh < params.poly_n or (nw, nh) == dims[-1]:
            break
        dims.append((nw, nh))
    return dims


def _build_pyramid(frame: GrayFrame, dims: list[tuple[int, int]]) -> list[np.ndarray]:
    levels = [frame.data]
    for w, h in dims[1:]:
        smoothed = correlate1d(levels[-1], _PYR_KERNEL, axis=0, mode="mirror")
        smoothed = correlate1d(smoothed, _PYR_KERNEL, axis=1, mode="mirror")
        # Low-pass and resize are convex; clip the float dust they leave.
        levels.append(np.clip(_resize_array(smoothed, w, h), 0.0, 255.0))
    return levels


def estimate_flow(a: GrayFrame, b: GrayFrame, params: FlowParams | None = None) -> FlowField:
    """Coarse-to-fine dense flow from frame ``a`` to frame ``b``."""
    params = params or FlowParams()
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"frame dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    if a.width < params.poly_n or a.height < params.poly_n:
        raise ValueError(
            f"frames {a.width}x{a.height} are smaller than the "
            f"{params.poly_n}x{params.poly_n} expansion neighborhood"
        )
    dims = _pyramid_dims(a.width, a.height, params)
    pyr_a = _build_pyramid(a, dims)
    pyr_b = _build_pyramid(b, dims)

    flow: FlowField | None = None
    for lvl in range(len(dims) - 1, -1, -1):
        w, h = dims[lvl]
        if flow is None:
            flow = FlowField.zeros(w, h)
        else:
            fx = _resize_array(flow.fx, w, h) * (w / flow.width)
            fy = _resize_array(flow.fy, w, h) * (h / flow.height)
            flow = FlowField(width=w, height=h, fx=fx, fy=fy)
        exp_a = poly_expansion(
            GrayFrame(width=w, height=h, data=pyr_a[lvl]), params.poly_n, params.poly_sigma
        )
        exp_b = poly_expansion(
            GrayFrame(width=w, height=h, data=pyr_b[lvl]), params.poly_n, params.poly_sigma
        )
        flow = flow_level(exp_a, exp_b, flow, params.winsize, params.iterations)
    assert flow is not None
    return flow


def flow_magnitude(flow: FlowField) -> np.ndarray:
    """Per-pixel displacement length sqrt(fx^2 + fy^2)."""
    return np.hypot(flow.fx, flow.fy)
