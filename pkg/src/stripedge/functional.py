"""Energies and the topological decrease that drives strip placement."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .grid import Grid, mass_matrix, nodal_values, stiffness_matrix

__all__ = [
    "Params",
    "energy_J",
    "energy_Jeps",
    "energy_difference",
    "topo_decrease",
    "threshold",
    "anisotropic_score",
    "write_trace",
    "TRACE_HEADER",
]


@dataclass(frozen=True)
class Params:
    """Model parameters, lengths in physical units.

    alpha : smoothing weight.
    beta : edge-length weight.
    eps : strip half-length.
    kappa : diffusivity on the edge set, in (0, 1).
    delta : half-width of the exclusion rectangle, in (0, eps).
    n_max : strips accepted between two re-solves (updating detector only).
    """

    alpha: float = 8.0
    beta: float = 150.0
    eps: float = 3.0
    kappa: float = 0.1
    delta: float = 2.0
    n_max: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0 < self.kappa < 1:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if not 0 < self.delta < self.eps:
            raise ValueError(f"delta must satisfy 0 < delta < eps, got {self.delta}")
        if self.n_max is not None and self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")


def energy_J(grid: Grid, u, v, f, alpha: float) -> float:
    """``1/2 int (u - f)^2 + alpha/2 int v |grad u|^2`` for bilinear ``u``.

    Both integrals are exact for the bilinear interpolants of ``u`` and ``f``
    (``f`` given as pixels or nodal values) and piecewise-constant ``v``.
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.size != grid.n_nodes:
        raise ValueError(f"u has {u.size} entries, grid has {grid.n_nodes} nodes")
    r = u - nodal_values(grid, f)
    fidelity = r @ (mass_matrix(grid) @ r)
    smooth = u @ (stiffness_matrix(grid, v) @ u)
    return 0.5 * fidelity + 0.5 * alpha * smooth


def energy_difference(grid: Grid, u0, v0, u1, v1, f, alpha: float) -> float:
    """``energy_J(u1, v1) - energy_J(u0, v0)`` without cancellation.

    Expands both quadratic forms around their difference, so that the result
    keeps its relative accuracy when the two energies nearly coincide.
    """
    u0 = np.asarray(u0, dtype=float).ravel()
    u1 = np.asarray(u1, dtype=float).ravel()
    fn = nodal_values(grid, f)
    du = u1 - u0
    M = mass_matrix(grid)
    fidelity = du @ (M @ (u1 + u0 - 2.0 * fn))
    S0 = stiffness_matrix(grid, v0)
    dv = np.asarray(v1, dtype=float).ravel() - np.asarray(v0, dtype=float).ravel()
    smooth = du @ (S0 @ (u1 + u0))
    if np.any(dv):
        smooth += u1 @ (stiffness_matrix(grid, dv) @ u1)
    return 0.5 * fidelity + 0.5 * alpha * smooth


def energy_Jeps(grid: Grid, u, v, f, params: Params, m: int) -> float:
    """``energy_J`` plus the edge cost ``2 beta eps m`` for ``m`` strips."""
    if m < 0:
        raise ValueError("strip count must be non-negative")
    return energy_J(grid, u, v, f, params.alpha) + 2.0 * params.beta * params.eps * m


def threshold(params: Params) -> float:
    """Squared gradient above which an optimally oriented strip pays off."""
    p = params
    return p.beta * p.kappa / (p.alpha * p.eps**2 * (1.0 - p.kappa))


def topo_decrease(g, params: Params) -> float:
    """Predicted change of the edge-penalized energy for the best strip at a
    point with gradient ``g``; negative values mean a profitable strip."""
    p = params
    gsq = float(g[0]) ** 2 + float(g[1]) ** 2
    return 2.0 * p.beta * p.eps - 2.0 * p.alpha * p.eps**3 * (1.0 - p.kappa) / p.kappa * gsq


def anisotropic_score(g, tau, kappa: float) -> float:
    """``M g . g`` with ``M = n n^T / kappa + tau tau^T`` and ``n = tau^perp``."""
    tx, ty = float(tau[0]), float(tau[1])
    if abs(math.hypot(tx, ty) - 1.0) > 1e-12:
        raise ValueError("tau must be a unit vector")
    gx, gy = float(g[0]), float(g[1])
    along = gx * tx + gy * ty
    across = gx * ty - gy * tx
    return across**2 / kappa + along**2


TRACE_HEADER = ("iter", "x", "y", "gradsq", "predicted_delta", "J_eps")


def write_trace(rows, path) -> None:
    """Write per-iteration diagnostics as CSV (see ``TRACE_HEADER``)."""
    with open(os.fspath(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in rows:
            writer.writerow([row.iter, repr(row.x), repr(row.y), repr(row.gradsq),
                             repr(row.predicted_delta), repr(row.J_eps)])
