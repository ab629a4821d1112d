"""Bilinear finite elements on rectangular grids.

Solves the screened diffusion problem ``u - alpha * div(v grad u) = f`` with
homogeneous Neumann boundary conditions, where ``u`` is bilinear on each
element and the diffusivity ``v`` is constant per element.

Layout conventions
------------------
Nodes are stored row-major with shape ``(ny + 1, nx + 1)``; node ``(j, i)``
sits at ``(xs[i], ys[j])``.  Elements are stored row-major with shape
``(ny, nx)``; element ``(j, i)`` has corners ``(j, i)``, ``(j, i+1)``,
``(j+1, i)``, ``(j+1, i+1)``.  The flat element index is ``j * nx + i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

__all__ = [
    "Grid",
    "SolverConfig",
    "SolverError",
    "mass_matrix",
    "stiffness_matrix",
    "assemble",
    "pixels_to_nodes",
    "project_rhs",
    "solve",
    "element_gradients",
    "element_gradient",
    "element_integrated_gradient",
]

# Local node order: (0,0), (1,0), (0,1), (1,1) in (x, y) reference coordinates.
_MASS_PATTERN = np.array(
    [[4.0, 2.0, 2.0, 1.0],
     [2.0, 4.0, 1.0, 2.0],
     [2.0, 1.0, 4.0, 2.0],
     [1.0, 2.0, 2.0, 4.0]]
) / 36.0
# d/dx contributions, to be scaled by hy/hx.
_STIFF_X = np.array(
    [[2.0, -2.0, 1.0, -1.0],
     [-2.0, 2.0, -1.0, 1.0],
     [1.0, -1.0, 2.0, -2.0],
     [-1.0, 1.0, -2.0, 2.0]]
) / 6.0
# d/dy contributions, to be scaled by hx/hy.
_STIFF_Y = np.array(
    [[2.0, 1.0, -2.0, -1.0],
     [1.0, 2.0, -1.0, -2.0],
     [-2.0, -1.0, 2.0, 1.0],
     [-1.0, -2.0, 1.0, 2.0]]
) / 6.0


_MAX_RESTARTS = 20


class SolverError(RuntimeError):
    """Raised when CG fails to reach the requested relative residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    cg_tol: float = 1e-10
    cg_maxit: int | None = None  # None -> 10 * node count

    def __post_init__(self):
        if not self.cg_tol > 0:
            raise ValueError("cg_tol must be positive")
        if self.cg_maxit is not None and self.cg_maxit < 1:
            raise ValueError("cg_maxit must be >= 1")

    def maxit(self, n: int) -> int:
        return self.cg_maxit if self.cg_maxit is not None else 10 * n


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product rectangular grid given by its node coordinates.

    Use :meth:`uniform` for pixel grids.  Non-uniform spacing is supported so
    that validation runs can refine locally around a thin strip.
    """

    xs: np.ndarray
    ys: np.ndarray
    _uniform_h: float | None = field(default=None, repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.size < 2 or ys.size < 2:
            raise ValueError("grid needs at least one element per axis")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("node coordinates must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def uniform(cls, nx: int, ny: int, h: float = 1.0, origin=(0.0, 0.0)) -> "Grid":
        if nx < 1 or ny < 1:
            raise ValueError("nx and ny must be >= 1")
        if not h > 0:
            raise ValueError("h must be positive")
        xs = origin[0] + h * np.arange(nx + 1)
        ys = origin[1] + h * np.arange(ny + 1)
        return cls(xs, ys, float(h))

    @property
    def nx(self) -> int:
        return self.xs.size - 1

    @property
    def ny(self) -> int:
        return self.ys.size - 1

    @property
    def node_shape(self) -> tuple[int, int]:
        return (self.ny + 1, self.nx + 1)

    @property
    def element_shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def is_uniform(self) -> bool:
        return self._uniform_h is not None

    @property
    def h(self) -> float:
        """Spacing of a uniform grid; the smallest spacing otherwise."""
        if self._uniform_h is not None:
            return self._uniform_h
        return float(min(np.diff(self.xs).min(), np.diff(self.ys).min()))

    @property
    def hx(self) -> np.ndarray:
        return np.diff(self.xs)

    @property
    def hy(self) -> np.ndarray:
        return np.diff(self.ys)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.xs[0], self.xs[-1], self.ys[0], self.ys[-1])

    def midpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Element midpoint coordinates, each of shape ``(ny, nx)``."""
        mx = 0.5 * (self.xs[:-1] + self.xs[1:])
        my = 0.5 * (self.ys[:-1] + self.ys[1:])
        return np.meshgrid(mx, my)

    def element_areas(self) -> np.ndarray:
        return np.outer(self.hy, self.hx)

    def element_nodes(self) -> np.ndarray:
        """Flat node indices of each element's corners, shape ``(n_elements, 4)``."""
        nx = self.nx
        j, i = np.divmod(np.arange(self.n_elements), nx)
        a = j * (nx + 1) + i
        return np.stack([a, a + 1, a + nx + 1, a + nx + 2], axis=1)

    def element_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.ny and 0 <= col < self.nx):
            raise IndexError(f"element ({row}, {col}) outside {self.ny}x{self.nx} grid")
        return row * self.nx + col


def _element_sizes(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    hy, hx = np.meshgrid(grid.hy, grid.hx, indexing="ij")
    return hx.ravel(), hy.ravel()


def _assemble_local(grid: Grid, local: np.ndarray) -> sp.csr_matrix:
    """Scatter per-element 4x4 blocks (shape ``(n_el, 4, 4)``) into a CSR matrix."""
    conn = grid.element_nodes()
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    n = grid.n_nodes
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def mass_matrix(grid: Grid) -> sp.csr_matrix:
    hx, hy = _element_sizes(grid)
    local = (hx * hy)[:, None, None] * _MASS_PATTERN
    return _assemble_local(grid, local)


def _as_element_field(grid: Grid, v) -> np.ndarray:
    if np.isscalar(v):
        return np.full(grid.n_elements, float(v))
    v = np.asarray(v, dtype=float)
    if v.size != grid.n_elements:
        raise ValueError(
            f"diffusivity has {v.size} entries, grid has {grid.n_elements} elements"
        )
    return v.ravel()


def stiffness_matrix(grid: Grid, v=1.0) -> sp.csr_matrix:
    """Exact stiffness matrix of ``int v grad(phi_a) . grad(phi_b)``.

    ``v`` is a scalar or one value per element.  Passing a 0/1 indicator
    gives the stiffness matrix restricted to the indicated elements.
    """
    v = _as_element_field(grid, v)
    hx, hy = _element_sizes(grid)
    local = (v * hy / hx)[:, None, None] * _STIFF_X + (v * hx / hy)[:, None, None] * _STIFF_Y
    return _assemble_local(grid, local)


def assemble(grid: Grid, v, alpha: float, kappa: float | None = None) -> sp.csr_matrix:
    """Return ``Mass + alpha * Stiffness(v)``.

    When ``kappa`` is given, ``v`` is checked to take only the values
    ``kappa`` and ``1``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    v = _as_element_field(grid, v)
    if kappa is not None:
        if not 0 < kappa < 1:
            raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
        if not np.all((v == 1.0) | (v == kappa)):
            raise ValueError("diffusivity must take only the values kappa and 1")
    elif np.any(v <= 0):
        raise ValueError("diffusivity must be positive")
    return (mass_matrix(grid) + alpha * stiffness_matrix(grid, v)).tocsr()


def pixels_to_nodes(pixels: np.ndarray) -> np.ndarray:
    """Map an ``(H, W)`` pixel array to ``(H+1, W+1)`` nodal values.

    Pixel ``(j, i)`` goes to node ``(j, i)``; the extra last row and column
    repeat their neighbours.
    """
    pixels = np.asarray(pixels, dtype=float)
    return np.pad(pixels, ((0, 1), (0, 1)), mode="edge")


def project_rhs(grid: Grid, f) -> np.ndarray:
    """Load vector ``Mass @ f_nodes``.

    ``f`` may be pixel data of shape ``(ny, nx)`` (an Image or array), or
    nodal values of shape ``(ny+1, nx+1)`` or flat length ``n_nodes``.
    """
    f_nodes = nodal_values(grid, f)
    return mass_matrix(grid) @ f_nodes


def nodal_values(grid: Grid, f) -> np.ndarray:
    data = getattr(f, "data", f)
    data = np.asarray(data, dtype=float)
    if data.shape == grid.element_shape:
        return pixels_to_nodes(data).ravel()
    if data.shape == grid.node_shape or data.shape == (grid.n_nodes,):
        return data.ravel().copy()
    raise ValueError(
        f"data of shape {data.shape} matches neither the {grid.element_shape} "
        f"element grid nor the {grid.node_shape} node grid"
    )


def solve(
    A: sp.spmatrix,
    b: np.ndarray,
    config: SolverConfig = SolverConfig(),
    x0: np.ndarray | None = None,
    project_constants: bool = False,
) -> np.ndarray:
    """Jacobi-preconditioned CG with a relative residual contract.

    Returns ``u`` with ``||A u - b|| <= cg_tol * ||b||``.  With
    ``project_constants`` the system is treated as singular with the constant
    vector as null space: ``b`` is projected to zero sum and the returned
    solution has zero mean.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if project_constants:
        b = b - b.mean()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise ValueError("operator diagonal must be positive")
    inv_diag = 1.0 / diag
    precond = LinearOperator((n, n), matvec=lambda r: inv_diag * r, dtype=float)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    maxit = config.maxit(n)
    target = config.cg_tol * bnorm
    used = 0
    res = np.inf
    # CG's recursive residual drifts from the true one on ill-conditioned
    # systems; restart from the true residual while that still makes progress.
    for _ in range(_MAX_RESTARTS):
        its = 0

        def count(_):
            nonlocal its
            its += 1

        x, _info = cg(A, b, x0=x, rtol=0.0, atol=0.5 * target, maxiter=maxit - used,
                      M=precond, callback=count)
        used += its
        if project_constants:
            x -= x.mean()
        previous, res = res, np.linalg.norm(b - A @ x)
        if res <= target or used >= maxit or res > 0.5 * previous:
            break
    if res <= target:
        return x
    raise SolverError(
        f"CG stopped after {used} iterations at relative residual "
        f"{res / bnorm:.3e} (target {config.cg_tol:.1e})",
        residual=res / bnorm,
    )


def element_gradients(grid: Grid, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of the bilinear interpolant at every element midpoint.

    Returns ``(gx, gy)``, each of shape ``(ny, nx)``.
    """
    U = np.asarray(u, dtype=float).reshape(grid.node_shape)
    hx = grid.hx[None, :]
    hy = grid.hy[:, None]
    gx = (U[:-1, 1:] + U[1:, 1:] - U[:-1, :-1] - U[1:, :-1]) / (2.0 * hx)
    gy = (U[1:, :-1] + U[1:, 1:] - U[:-1, :-1] - U[:-1, 1:]) / (2.0 * hy)
    return gx, gy


def element_gradient(grid: Grid, u: np.ndarray, element: int) -> np.ndarray:
    if not 0 <= element < grid.n_elements:
        raise IndexError(f"element {element} out of range [0, {grid.n_elements})")
    j, i = divmod(element, grid.nx)
    U = np.asarray(u, dtype=float).reshape(grid.node_shape)
    hx = grid.xs[i + 1] - grid.xs[i]
    hy = grid.ys[j + 1] - grid.ys[j]
    gx = (U[j, i + 1] + U[j + 1, i + 1] - U[j, i] - U[j + 1, i]) / (2.0 * hx)
    gy = (U[j + 1, i] + U[j + 1, i + 1] - U[j, i] - U[j, i + 1]) / (2.0 * hy)
    return np.array([gx, gy])


def element_integrated_gradient(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Per-element integrals of each local basis gradient.

    Returns ``(Gx, Gy)`` of shape ``(n_elements, 4)`` with
    ``Gx[e, a] = int_e d(phi_a)/dx``.
    """
    hx, hy = _element_sizes(grid)
    Gx = 0.5 * hy[:, None] * np.array([-1.0, 1.0, -1.0, 1.0])
    Gy = 0.5 * hx[:, None] * np.array([-1.0, -1.0, 1.0, 1.0])
    return Gx, Gy
