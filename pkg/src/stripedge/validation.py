"""Numerical checks of the energy identity, the topological expansion and
the polarization tensor of a thin strip."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .functional import anisotropic_score, energy_difference
from .geometry import EdgeSet, Strip, edge_indicator, initial_mask, rasterize_strip
from .grid import (
    Grid,
    SolverConfig,
    assemble,
    element_gradients,
    element_integrated_gradient,
    nodal_values,
    project_rhs,
    solve,
    stiffness_matrix,
)
from .image_io import Image

__all__ = [
    "energy_identity_terms",
    "check_energy_identity",
    "IdentityTrial",
    "random_identity_trials",
    "write_identity_csv",
    "refined_axis",
    "strip_adapted_grid",
    "ExpansionRow",
    "ExpansionReport",
    "verify_expansion",
    "TensorEstimate",
    "estimate_polarization",
    "polarization_tensor",
    "write_tensor_csv",
]


# ---------------------------------------------------------------------------
# energy identity

def energy_identity_terms(
    f: Image,
    K: EdgeSet | Sequence[Strip],
    strip: Strip,
    alpha: float,
    kappa: float,
    solver: SolverConfig = SolverConfig(),
    intensity_scale: float = 1.0,
) -> tuple[float, float, float]:
    """Both sides of the identity for adding ``strip`` to the edge set ``K``.

    Returns ``(lhs, rhs, scale)`` where ``lhs = J(u_eps, v_eps) - J(u, v)``,
    ``rhs = alpha (kappa - 1) / 2 * int_strip grad u_eps . grad u`` and
    ``scale = 1/2 int f^2`` (used as a floor when both sides vanish).
    """
    grid = Grid.uniform(f.width, f.height, f.h)
    if isinstance(K, EdgeSet):
        K_raster = K.raster.ravel()
    else:
        K_raster = EdgeSet(grid, floor=True, strips=list(K)).raster.ravel()
    cells = rasterize_strip(strip, grid, floor=True)
    if cells.size == 0:
        raise ValueError("strip does not cover any element")
    if np.any(K_raster[cells]):
        raise ValueError("strip overlaps the existing edge set")
    strip_mask = np.zeros(grid.n_elements, dtype=bool)
    strip_mask[cells] = True

    f_pixels = intensity_scale * f.data
    b = project_rhs(grid, f_pixels)
    v = edge_indicator(K_raster, kappa)
    v_eps = edge_indicator(K_raster | strip_mask, kappa)
    u = solve(assemble(grid, v, alpha), b, solver)
    u_eps = solve(assemble(grid, v_eps, alpha), b, solver, x0=u)

    lhs = energy_difference(grid, u, v, u_eps, v_eps, f_pixels, alpha)
    S_strip = stiffness_matrix(grid, strip_mask.astype(float))
    rhs = 0.5 * alpha * (kappa - 1.0) * (u_eps @ (S_strip @ u))
    scale = 0.5 * nodal_values(grid, f_pixels) @ b  # 1/2 f^T M f
    return float(lhs), float(rhs), float(scale)


def check_energy_identity(
    f: Image,
    K: EdgeSet | Sequence[Strip],
    strip: Strip,
    alpha: float,
    kappa: float,
    solver: SolverConfig = SolverConfig(),
    intensity_scale: float = 1.0,
) -> float:
    """Relative residual ``|lhs - rhs| / max(|lhs|, cg_tol * scale)``.

    In the Galerkin discretization the identity is exact, so the residual
    only reflects the CG tolerance.  The floor keeps constant images, where
    both sides vanish, from dividing rounding noise by zero.
    """
    lhs, rhs, scale = energy_identity_terms(f, K, strip, alpha, kappa, solver, intensity_scale)
    denom = max(abs(lhs), solver.cg_tol * scale, np.finfo(float).tiny)
    return abs(lhs - rhs) / denom


@dataclass(frozen=True)
class IdentityTrial:
    trial: int
    strip: Strip
    edge_strips: tuple[Strip, ...]
    lhs: float
    rhs: float
    residual: float


def random_identity_trials(
    f: Image,
    params,
    n_trials: int = 20,
    seed: int = 0,
    solver: SolverConfig = SolverConfig(),
    intensity_scale: float = 1.0,
) -> list[IdentityTrial]:
    """Energy identity on random admissible strips.

    Centres are drawn from the boundary-clear candidate set; orientations are
    uniform.  Odd trials place one earlier strip, at least ``4 eps`` away, in
    the edge set first.
    """
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(f.width, f.height, f.h)
    mx, my = (m.ravel() for m in grid.midpoints())
    candidates = np.flatnonzero(initial_mask(grid, params.delta))
    if candidates.size == 0:
        raise ValueError("image has no admissible strip centre")
    half_width = 0.5 * grid.h

    def draw() -> Strip:
        e = candidates[rng.integers(candidates.size)]
        theta = rng.uniform(0.0, np.pi)
        return Strip((mx[e], my[e]), (np.cos(theta), np.sin(theta)), params.eps, half_width)

    trials = []
    for k in range(n_trials):
        strip = draw()
        K: tuple[Strip, ...] = ()
        if k % 2 == 1:
            for _ in range(1000):
                other = draw()
                gap = math.dist(other.center, strip.center)
                if gap >= 4.0 * params.eps:
                    K = (other,)
                    break
            else:
                raise ValueError("image too small for a distant second strip")
        lhs, rhs, scale = energy_identity_terms(f, K, strip, params.alpha, params.kappa,
                                                solver, intensity_scale)
        denom = max(abs(lhs), solver.cg_tol * scale, np.finfo(float).tiny)
        trials.append(IdentityTrial(k, strip, K, lhs, rhs, abs(lhs - rhs) / denom))
    return trials


def write_identity_csv(trials: Sequence[IdentityTrial], path) -> None:
    with open(os.fspath(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("trial", "edge_strips", "cx", "cy", "tx", "ty", "lhs", "rhs", "residual"))
        for t in trials:
            s = t.strip
            w.writerow([t.trial, len(t.edge_strips), repr(s.center[0]), repr(s.center[1]),
                        repr(s.tangent[0]), repr(s.tangent[1]), repr(t.lhs), repr(t.rhs),
                        repr(t.residual)])


# ---------------------------------------------------------------------------
# graded grids

def refined_axis(lo: float, hi: float, center: float, half_extent: float,
                 h_fine: float, h_coarse: float, growth: float = 1.2) -> np.ndarray:
    """Node coordinates on ``[lo, hi]``: spacing ``h_fine`` on
    ``[center - half_extent, center + half_extent]`` (with ``center`` a node),
    growing geometrically by ``growth`` up to ``h_coarse`` outside."""
    if not (lo < center - half_extent and center + half_extent < hi):
        raise ValueError("refined block must lie strictly inside the interval")
    if not (h_fine > 0 and h_coarse >= h_fine and growth > 1):
        raise ValueError("need 0 < h_fine <= h_coarse and growth > 1")
    k = math.ceil(half_extent / h_fine - 1e-9)

    def side(limit: float) -> list[float]:
        # offsets from the edge of the fine block out to ``limit`` (>0)
        out, pos, step = [], 0.0, h_fine
        while True:
            step = min(step * growth, h_coarse)
            if pos + step >= limit - 0.5 * step:
                out.append(limit)
                return out
            pos += step
            out.append(pos)

    fine = center + h_fine * np.arange(-k, k + 1)
    left = fine[0] - np.array(side(fine[0] - lo))[::-1]
    right = fine[-1] + np.array(side(hi - fine[-1]))
    xs = np.concatenate([left, fine, right])
    xs[0], xs[-1] = lo, hi
    return xs


def strip_adapted_grid(strip: Strip, h_fine: float, domain=(0.0, 1.0, 0.0, 1.0),
                       h_coarse: float = 1.0 / 64, growth: float = 1.2,
                       pad: float | None = None) -> Grid:
    """Tensor grid with uniform spacing ``h_fine`` on the strip's bounding box
    (plus ``pad``), graded towards ``h_coarse`` away from it.  The strip
    centre is a grid node."""
    cx, cy = strip.center
    tx, ty = strip.tangent
    if pad is None:
        pad = 4.0 * strip.half_width
    ex = abs(tx) * strip.half_length + strip.half_width + pad
    ey = abs(ty) * strip.half_length + strip.half_width + pad
    x0, x1, y0, y1 = domain
    xs = refined_axis(x0, x1, cx, ex, h_fine, h_coarse, growth)
    ys = refined_axis(y0, y1, cy, ey, h_fine, h_coarse, growth)
    return Grid(xs, ys)


def _gradient_at_node(grid: Grid, u: np.ndarray, x: float, y: float) -> np.ndarray:
    """Mean of the midpoint gradients of the elements sharing node ``(x, y)``."""
    i = int(np.argmin(np.abs(grid.xs - x)))
    j = int(np.argmin(np.abs(grid.ys - y)))
    if not (math.isclose(grid.xs[i], x, abs_tol=1e-12) and math.isclose(grid.ys[j], y, abs_tol=1e-12)):
        raise ValueError("point is not a grid node")
    gx, gy = element_gradients(grid, u)
    rows = slice(max(j - 1, 0), min(j + 1, grid.ny))
    cols = slice(max(i - 1, 0), min(i + 1, grid.nx))
    return np.array([gx[rows, cols].mean(), gy[rows, cols].mean()])


# ---------------------------------------------------------------------------
# expansion

@dataclass(frozen=True)
class ExpansionRow:
    eps: float
    direct: float
    predicted: float
    n_elements: int
    strip_area: float

    @property
    def ratio(self) -> float:
        return self.direct / self.predicted if self.predicted != 0 else math.nan

    @property
    def residual_scaled(self) -> float:
        return abs(self.direct - self.predicted) / self.eps**3


@dataclass
class ExpansionReport:
    y: tuple[float, float]
    tau: tuple[float, float]
    alpha: float
    kappa: float
    gradient: tuple[float, float]
    rows: list[ExpansionRow] = field(default_factory=list)

    HEADER = ("eps", "direct", "predicted", "ratio", "residual_over_eps3")

    def to_csv(self, path) -> None:
        with open(os.fspath(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.HEADER)
            for r in self.rows:
                w.writerow([repr(r.eps), repr(r.direct), repr(r.predicted),
                            repr(r.ratio), repr(r.residual_scaled)])

    def table(self) -> str:
        lines = [f"{'eps':>10} {'direct dJ':>14} {'predicted dJ':>14} {'ratio':>8} {'|res|/eps^3':>12}"]
        for r in self.rows:
            lines.append(f"{r.eps:10.5g} {r.direct:14.6e} {r.predicted:14.6e} "
                         f"{r.ratio:8.4f} {r.residual_scaled:12.4e}")
        return "\n".join(lines)


def verify_expansion(
    f_smooth: Callable[[np.ndarray, np.ndarray], np.ndarray],
    y: Sequence[float],
    tau: Sequence[float],
    eps_list: Sequence[float],
    alpha: float,
    kappa: float,
    solver: SolverConfig = SolverConfig(),
    domain=(0.0, 1.0, 0.0, 1.0),
    cells_per_halfwidth: int = 2,
    h_coarse: float = 1.0 / 64,
    growth: float = 1.2,
) -> ExpansionReport:
    """Compare the measured energy change from inserting a strip at ``y`` with
    the leading-order prediction ``2 alpha (kappa - 1) eps^3 M grad u . grad u``.

    For each ``eps`` a grid is refined around the strip so that its
    half-width ``eps**2`` spans ``cells_per_halfwidth`` elements; no
    thickness floor is applied.  ``f_smooth(x, y)`` is sampled at the nodes.
    """
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if len(set(eps_list)) != len(eps_list):
        raise ValueError("eps values must be distinct")
    if cells_per_halfwidth < 1:
        raise ValueError("the strip half-width must span at least one element (eps^2 >= h)")
    tx, ty = (float(t) for t in tau)
    report = None
    for eps in eps_list:
        strip = Strip(tuple(y), (tx, ty), eps, eps**2)
        h_fine = eps**2 / cells_per_halfwidth
        grid = strip_adapted_grid(strip, h_fine, domain, max(h_coarse, h_fine), growth)
        if eps**2 < grid.h * (1 - 1e-12):
            raise ValueError(f"eps={eps}: eps^2 < h, strip geometry not representable")
        X, Y = np.meshgrid(grid.xs, grid.ys)
        f_nodes = np.asarray(f_smooth(X, Y), dtype=float)
        b = project_rhs(grid, f_nodes)
        cells = rasterize_strip(strip, grid, floor=False)
        mask = np.zeros(grid.n_elements, dtype=bool)
        mask[cells] = True
        v0 = np.ones(grid.n_elements)
        v1 = np.where(mask, kappa, 1.0)
        u = solve(assemble(grid, v0, alpha), b, solver)
        u_eps = solve(assemble(grid, v1, alpha), b, solver, x0=u)
        direct = energy_difference(grid, u, v0, u_eps, v1, f_nodes, alpha)
        g = _gradient_at_node(grid, u, *strip.center)
        predicted = 2.0 * alpha * (kappa - 1.0) * eps**3 * anisotropic_score(g, (tx, ty), kappa)
        if report is None:
            report = ExpansionReport(tuple(y), (tx, ty), alpha, kappa, (float(g[0]), float(g[1])))
        area = float(grid.element_areas().ravel()[mask].sum())
        report.rows.append(ExpansionRow(eps, float(direct), float(predicted), int(cells.size), area))
    return report


# ---------------------------------------------------------------------------
# polarization tensor

@dataclass(frozen=True)
class TensorEstimate:
    eps: float
    kappa: float
    m_tt: float
    m_nn: float

    @property
    def ref_tt(self) -> float:
        return 1.0

    @property
    def ref_nn(self) -> float:
        return 1.0 / self.kappa

    @property
    def trace(self) -> float:
        return self.m_tt + self.m_nn


def estimate_polarization(
    xi: Sequence[float],
    eps: float,
    kappa: float,
    grid: Grid,
    solver: SolverConfig = SolverConfig(cg_tol=1e-8),
    tau: Sequence[float] = (1.0, 0.0),
    center: Sequence[float] | None = None,
) -> float:
    """``M xi . xi`` for a strip of half-length ``eps`` and half-width
    ``eps**2``, from the corrector ``W`` solving
    ``div(gamma grad W) = div((1 - kappa) 1_strip xi)`` with natural boundary
    conditions:  ``|xi|^2 + mean over the strip of grad W . xi``.
    """
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    xi = np.asarray(xi, dtype=float)
    if eps**2 < grid.h * (1 - 1e-12):
        raise ValueError(f"eps={eps}: eps^2 < h={grid.h}, strip geometry not representable")
    x0, x1, y0, y1 = grid.bounds
    if center is None:
        center = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    strip = Strip(tuple(center), tuple(tau), eps, eps**2)
    reach = strip.half_length + strip.half_width
    if not (x0 < center[0] - reach and center[0] + reach < x1
            and y0 < center[1] - reach and center[1] + reach < y1):
        raise ValueError("strip must lie inside the domain")
    cells = rasterize_strip(strip, grid, floor=False)
    if cells.size == 0:
        raise ValueError("strip covers no element")
    mask = np.zeros(grid.n_elements, dtype=bool)
    mask[cells] = True
    xi_sq = float(xi @ xi)
    if kappa == 1.0:
        return xi_sq

    Gx, Gy = element_integrated_gradient(grid)
    conn = grid.element_nodes()
    local = (1.0 - kappa) * (xi[0] * Gx[cells] + xi[1] * Gy[cells])
    b = np.bincount(conn[cells].ravel(), local.ravel(), minlength=grid.n_nodes)
    S = stiffness_matrix(grid, np.where(mask, kappa, 1.0))
    W = solve(S, b, solver, project_constants=True)

    gx, gy = (g.ravel()[cells] for g in element_gradients(grid, W))
    areas = grid.element_areas().ravel()[cells]
    mean_proj = np.sum(areas * (xi[0] * gx + xi[1] * gy)) / areas.sum()
    return xi_sq + float(mean_proj)


def polarization_tensor(eps: float, kappa: float, grid: Grid,
                        solver: SolverConfig = SolverConfig(cg_tol=1e-8),
                        tau: Sequence[float] = (1.0, 0.0)) -> TensorEstimate:
    """Tangential and normal entries of the tensor for one ``eps``."""
    tx, ty = (float(t) for t in tau)
    m_tt = estimate_polarization((tx, ty), eps, kappa, grid, solver, tau=(tx, ty))
    m_nn = estimate_polarization((ty, -tx), eps, kappa, grid, solver, tau=(tx, ty))
    return TensorEstimate(float(eps), float(kappa), m_tt, m_nn)


def write_tensor_csv(estimates: Sequence[TensorEstimate], path) -> None:
    with open(os.fspath(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("eps", "kappa", "m_tt", "m_nn", "ref_tt", "ref_nn"))
        for e in estimates:
            w.writerow([repr(e.eps), repr(e.kappa), repr(e.m_tt), repr(e.m_nn),
                        repr(e.ref_tt), repr(e.ref_nn)])
