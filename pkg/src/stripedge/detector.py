"""Greedy strip placement driven by the topological decrease.

``detect_static`` smooths the image once and places strips on that smoothed
image.  ``detect_updating`` re-smooths with the current edge indicator after
every ``n_max`` accepted strips.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .functional import Params, energy_J, threshold, topo_decrease
from .geometry import EdgeSet, edge_indicator, enlargement, exclude, initial_mask, make_strip
from .grid import Grid, SolverConfig, assemble, element_gradients, project_rhs, solve
from .image_io import Image

__all__ = ["TraceRow", "DetectionResult", "detect_static", "detect_updating", "choose_nmax"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceRow:
    """One accepted strip.

    ``J_eps`` is the edge-penalized energy of the smoothed image used for the
    selection, counting the strips accepted before this one.
    """

    iter: int
    x: float
    y: float
    gradsq: float
    predicted_delta: float
    J_eps: float
    solve: int = 0


@dataclass
class DetectionResult:
    grid: Grid
    params: Params
    edges: EdgeSet
    u: np.ndarray
    v: np.ndarray
    intensity_scale: float
    trace: list[TraceRow] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    """Edge-penalized energy after each PDE solve."""
    solve_strip_counts: list[int] = field(default_factory=list)
    n_max: int | None = None

    @property
    def strips(self):
        return self.edges.strips

    @property
    def n_solves(self) -> int:
        return len(self.energies)

    def smoothed_pixels(self) -> np.ndarray:
        """Smoothed image at the pixel nodes, back in [0, 1] intensity units."""
        U = self.u.reshape(self.grid.node_shape)
        return U[:-1, :-1] / self.intensity_scale


class _Run:
    """Mutable state shared by both detectors."""

    def __init__(self, f: Image, params: Params, solver: SolverConfig, intensity_scale: float):
        eps_cells = math.ceil(params.eps / f.h - 1e-12)
        min_side = 2 * eps_cells + 1
        if f.width < min_side or f.height < min_side:
            raise ValueError(
                f"image {f.width}x{f.height} is smaller than {min_side}x{min_side} "
                f"elements required for eps={params.eps}"
            )
        if not intensity_scale > 0:
            raise ValueError("intensity_scale must be positive")
        self.params = params
        self.solver = solver
        self.scale = float(intensity_scale)
        self.grid = Grid.uniform(f.width, f.height, f.h)
        self.f_pixels = self.scale * f.data
        self.b = project_rhs(self.grid, self.f_pixels)
        self.thr = threshold(params)
        self.edges = EdgeSet(self.grid, floor=True)
        self.mask = initial_mask(self.grid, params.delta)
        self.mx, self.my = (m.ravel() for m in self.grid.midpoints())
        self.v = np.ones(self.grid.n_elements)
        self.u = None
        self.trace: list[TraceRow] = []
        self.energies: list[float] = []
        self.solve_strip_counts: list[int] = []

    def resolve(self, v: np.ndarray) -> None:
        A = assemble(self.grid, v, self.params.alpha)
        self.u = solve(A, self.b, self.solver, x0=self.u)
        self.v = v
        self.gx, self.gy = (g.ravel() for g in element_gradients(self.grid, self.u))
        self.gsq = self.gx**2 + self.gy**2
        # descending |grad u|^2, ties broken by smallest element index
        n = self.gsq.size
        self.order = np.lexsort((np.arange(n), -self.gsq))
        self.J = float(energy_J(self.grid, self.u, v, self.f_pixels, self.params.alpha))
        self.energies.append(self.J_eps(len(self.edges)))
        self.solve_strip_counts.append(len(self.edges))

    def J_eps(self, m: int) -> float:
        p = self.params
        return self.J + 2.0 * p.beta * p.eps * m

    def max_admissible_gradsq(self) -> float:
        admissible = self.mask.ravel()
        return float(self.gsq[admissible].max()) if admissible.any() else -math.inf

    def place(self, budget: float) -> tuple[int, str]:
        """Accept up to ``budget`` strips on the current ``u``.

        Returns the number accepted and why the scan ended: ``"budget"``,
        ``"threshold"`` or ``"exhausted"`` (no admissible element left).
        """
        p = self.params
        admissible = self.mask.ravel()
        half_width = 0.5 * self.grid.h
        added = 0
        for e in self.order:
            if added >= budget:
                return added, "budget"
            if not admissible[e]:
                continue
            gsq = self.gsq[e]
            if gsq < self.thr:
                return added, "threshold"
            g = (self.gx[e], self.gy[e])
            strip = make_strip((self.mx[e], self.my[e]), g, p.eps, half_width=half_width)
            self.trace.append(TraceRow(
                iter=len(self.trace) + 1,
                x=float(self.mx[e]),
                y=float(self.my[e]),
                gradsq=float(gsq),
                predicted_delta=topo_decrease(g, p),
                J_eps=self.J_eps(len(self.edges)),
                solve=len(self.energies),
            ))
            self.edges.add(strip)
            exclude(self.mask, enlargement(strip, p.delta, self.grid))
            added += 1
        return added, "budget" if added >= budget else "exhausted"

    def result(self, n_max=None) -> DetectionResult:
        return DetectionResult(
            grid=self.grid,
            params=self.params,
            edges=self.edges,
            u=self.u,
            v=self.v,
            intensity_scale=self.scale,
            trace=self.trace,
            energies=self.energies,
            solve_strip_counts=self.solve_strip_counts,
            n_max=n_max,
        )


def detect_static(
    f: Image,
    params: Params,
    solver: SolverConfig = SolverConfig(),
    intensity_scale: float = 255.0,
) -> DetectionResult:
    """Smooth once with ``v = 1``, then place strips until the stop test fires.

    ``intensity_scale`` multiplies the [0, 1] image before smoothing, so that
    ``alpha`` and ``beta`` refer to 8-bit gray values by default.  The
    returned ``v`` is the edge indicator of the final edge set; it is never
    used for smoothing here.
    """
    run = _Run(f, params, solver, intensity_scale)
    run.resolve(run.v)
    added, why = run.place(math.inf)
    log.debug("static detector: %d strips, stopped on %s", added, why)
    run.v = edge_indicator(run.edges, params.kappa).ravel()
    return run.result()


def detect_updating(
    f: Image,
    params: Params,
    solver: SolverConfig = SolverConfig(),
    intensity_scale: float = 255.0,
) -> DetectionResult:
    """Alternate between placing ``n_max`` strips and re-smoothing with the
    edge indicator, until no admissible element passes the stop test.

    ``params.n_max`` of ``None`` selects :func:`choose_nmax`.
    """
    n_max = params.n_max
    if n_max is None:
        n_max = choose_nmax(f.width, f.height, params.eps, f.h)
    run = _Run(f, params, solver, intensity_scale)
    run.resolve(run.v)
    while True:
        added, why = run.place(n_max)
        if added == 0:
            break
        run.resolve(edge_indicator(run.edges, params.kappa).ravel())
        log.debug("re-solve %d: %d strips total, J_eps=%.6g",
                  len(run.energies) - 1,
                  len(run.edges), run.energies[-1])
        if why == "exhausted":
            break
    return run.result(n_max)


def choose_nmax(nx: int, ny: int, eps: float, h: float = 1.0,
                estimate: float | None = None, override: int | None = None) -> int:
    """Strips per re-solve so that about ten solves are needed.

    The strip count ``estimate`` defaults to the image perimeter divided by
    the strip length.  ``override`` wins when given.
    """
    if override is not None:
        if override < 1:
            raise ValueError("n_max override must be >= 1")
        return int(override)
    if estimate is None:
        estimate = 2.0 * (nx + ny) / (2.0 * eps / h)
    return max(1, math.ceil(estimate / 10.0))
