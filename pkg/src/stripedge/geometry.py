"""Strips, their rasterization, enlargement rectangles and candidate masks."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

__all__ = [
    "Strip",
    "EdgeSet",
    "make_strip",
    "segment_distance",
    "rasterize_strip",
    "enlargement",
    "initial_mask",
    "exclude",
    "edge_indicator",
    "write_strips",
    "read_strips",
]


@dataclass(frozen=True)
class Strip:
    """Segment ``center + t * tangent`` for ``|t| <= half_length``, thickened
    by ``half_width`` on each side."""

    center: tuple[float, float]
    tangent: tuple[float, float]
    half_length: float
    half_width: float

    def __post_init__(self):
        tx, ty = (float(c) for c in self.tangent)
        if abs(math.hypot(tx, ty) - 1.0) > 1e-12:
            raise ValueError("tangent must be a unit vector")
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "tangent", (tx, ty))

    @property
    def normal(self) -> tuple[float, float]:
        # tangent = (-n2, n1)  =>  n = (t2, -t1)
        return (self.tangent[1], -self.tangent[0])

    @property
    def eps(self) -> float:
        return self.half_length


def make_strip(y, g, eps: float, half_width: float | None = None) -> Strip:
    """Strip centred at ``y`` whose normal is the direction of ``g``.

    ``half_width`` defaults to ``eps**2``.
    """
    gx, gy = float(g[0]), float(g[1])
    norm = math.hypot(gx, gy)
    if norm == 0.0:
        raise ValueError("cannot orient a strip at a zero gradient")
    n1, n2 = gx / norm, gy / norm
    tau = (-n2, n1)
    # renormalise to keep |tau| = 1 to rounding
    tn = math.hypot(*tau)
    tau = (tau[0] / tn + 0.0, tau[1] / tn + 0.0)  # + 0.0 drops negative zeros
    return Strip(tuple(y), tau, eps, eps**2 if half_width is None else half_width)


def segment_distance(px, py, strip: Strip) -> np.ndarray:
    """Distance from points to the strip's centre segment."""
    cx, cy = strip.center
    tx, ty = strip.tangent
    dx = np.asarray(px, dtype=float) - cx
    dy = np.asarray(py, dtype=float) - cy
    t = np.clip(dx * tx + dy * ty, -strip.half_length, strip.half_length)
    return np.hypot(dx - t * tx, dy - t * ty)


def _window(grid: Grid, strip: Strip, reach: float):
    """Row/column slices of elements whose midpoints may lie within ``reach``."""
    cx, cy = strip.center
    ext_x = abs(strip.tangent[0]) * strip.half_length + reach
    ext_y = abs(strip.tangent[1]) * strip.half_length + reach
    mx = 0.5 * (grid.xs[:-1] + grid.xs[1:])
    my = 0.5 * (grid.ys[:-1] + grid.ys[1:])
    # one element of slack on each side; the exact test happens afterwards
    i0 = max(int(np.searchsorted(mx, cx - ext_x, side="left")) - 1, 0)
    i1 = min(int(np.searchsorted(mx, cx + ext_x, side="right")) + 1, grid.nx)
    j0 = max(int(np.searchsorted(my, cy - ext_y, side="left")) - 1, 0)
    j1 = min(int(np.searchsorted(my, cy + ext_y, side="right")) + 1, grid.ny)
    return mx[i0:i1], my[j0:j1], i0, j0


def _to_flat(grid: Grid, hits: np.ndarray, i0: int, j0: int) -> np.ndarray:
    jj, ii = np.nonzero(hits)
    return np.sort((jj + j0) * grid.nx + (ii + i0))


def rasterize_strip(strip: Strip, grid: Grid, floor: bool = True) -> np.ndarray:
    """Flat indices (sorted) of elements whose midpoint lies in the strip.

    The thickness used is ``max(half_width, h/2)`` with ``floor``, otherwise
    ``half_width``.
    """
    width = max(strip.half_width, 0.5 * grid.h) if floor else strip.half_width
    mx, my, i0, j0 = _window(grid, strip, width)
    if mx.size == 0 or my.size == 0:
        return np.empty(0, dtype=int)
    px, py = np.meshgrid(mx, my)
    hits = segment_distance(px, py, strip) <= width
    return _to_flat(grid, hits, i0, j0)


def enlargement(strip: Strip, delta: float, grid: Grid) -> np.ndarray:
    """Elements in the ``2*eps`` by ``2*delta`` rectangle around the strip."""
    if not 0 < delta < strip.half_length:
        raise ValueError(f"delta must satisfy 0 < delta < eps, got {delta}")
    mx, my, i0, j0 = _window(grid, strip, delta)
    if mx.size == 0 or my.size == 0:
        return np.empty(0, dtype=int)
    px, py = np.meshgrid(mx, my)
    cx, cy = strip.center
    tx, ty = strip.tangent
    along = np.abs((px - cx) * tx + (py - cy) * ty)
    hits = (segment_distance(px, py, strip) <= delta) & (along <= strip.half_length)
    return _to_flat(grid, hits, i0, j0)


def initial_mask(grid: Grid, delta: float) -> np.ndarray:
    """Admissible centres: elements whose midpoint is farther than ``delta``
    from the boundary.  Boolean array of shape ``(ny, nx)``."""
    mx, my = grid.midpoints()
    x0, x1, y0, y1 = grid.bounds
    dist = np.minimum(np.minimum(mx - x0, x1 - mx), np.minimum(my - y0, y1 - my))
    return dist > delta


def exclude(mask: np.ndarray, elements) -> np.ndarray:
    """Mark ``elements`` (flat indices) inadmissible, in place; returns ``mask``."""
    mask.ravel()[np.asarray(elements, dtype=int)] = False
    return mask


@dataclass
class EdgeSet:
    """Ordered strips plus the union of their rasterizations."""

    grid: Grid
    floor: bool = True
    strips: list[Strip] = field(default_factory=list)
    raster: np.ndarray = field(init=False)

    def __post_init__(self):
        self.raster = np.zeros(self.grid.element_shape, dtype=bool)
        for s in self.strips:
            self.raster.ravel()[rasterize_strip(s, self.grid, self.floor)] = True

    def add(self, strip: Strip) -> np.ndarray:
        cells = rasterize_strip(strip, self.grid, self.floor)
        self.strips.append(strip)
        self.raster.ravel()[cells] = True
        return cells

    def __len__(self) -> int:
        return len(self.strips)

    def elements(self) -> np.ndarray:
        return np.flatnonzero(self.raster)


def edge_indicator(K: EdgeSet | np.ndarray, kappa: float, grid: Grid | None = None) -> np.ndarray:
    """Per-element diffusivity: ``kappa`` on the edge set, ``1`` elsewhere."""
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    raster = K.raster if isinstance(K, EdgeSet) else np.asarray(K, dtype=bool)
    if grid is not None:
        raster = raster.reshape(grid.element_shape)
    return np.where(raster, kappa, 1.0)


def write_strips(strips, path) -> None:
    """One ``cx cy tx ty eps`` line per strip."""
    with open(os.fspath(path), "w") as fh:
        for s in strips:
            fh.write(f"{s.center[0]!r} {s.center[1]!r} {s.tangent[0]!r} "
                     f"{s.tangent[1]!r} {s.half_length!r}\n")


def read_strips(path, half_width: float | None = None) -> list[Strip]:
    strips = []
    with open(os.fspath(path)) as fh:
        for line in fh:
            if not line.strip():
                continue
            cx, cy, tx, ty, eps = (float(tok) for tok in line.split())
            strips.append(Strip((cx, cy), (tx, ty), eps,
                                eps**2 if half_width is None else half_width))
    return strips
