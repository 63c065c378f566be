"""Implicit Euler cell-centered finite volumes for the 1D heat equation.

One time step is the tridiagonal system ``A @ T_next = b(T_prev)``. Dirichlet
values sit on the domain faces, half a cell away from the outer centers.
The corrected (hybrid) step adds a source vector ``sigma`` to ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mms import (
    ManufacturedSolution,
    PhysicalParams,
    SpatialGrid,
    TimeGrid,
    boundary_values,
    sample_source,
)

PIVOT_TOL = 1e-14


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TridiagonalSystem:
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1 or len(self.rhs) != n:
            raise ValueError(
                f"inconsistent tridiagonal shapes: lower={len(self.lower)}, diag={n}, "
                f"upper={len(self.upper)}, rhs={len(self.rhs)}"
            )

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return tridiag_matvec(self.lower, self.diag, self.upper, v)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def is_diagonally_dominant(self) -> bool:
        off = np.zeros_like(self.diag)
        off[1:] += np.abs(self.lower)
        off[:-1] += np.abs(self.upper)
        return bool(np.all(np.abs(self.diag) > off))


@dataclass(frozen=True)
class StepContext:
    """Everything one step needs besides the previous state.

    ``source_profile`` is q at the cell centers for the new time level, or
    ``None`` when the source is withheld (treated as zero). For stacked
    states of shape ``(n_cells, m)`` the boundary values may be length-``m``
    arrays and the source ``(n_cells, m)``; each column is then its own step.
    """

    grid: SpatialGrid
    dt: float
    params: PhysicalParams
    bc_left: float | np.ndarray
    bc_right: float | np.ndarray
    source_profile: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.source_profile is not None and np.shape(self.source_profile)[0] != self.grid.n_cells:
            raise ValueError("source_profile length must equal n_cells")

    @property
    def r(self) -> float:
        return self.params.k * self.dt / (self.params.rho_cv * self.grid.dx**2)

    @property
    def source_withheld(self) -> bool:
        return self.source_profile is None


def step_context(
    sol: ManufacturedSolution,
    grid: SpatialGrid,
    time_grid: TimeGrid,
    n: int,
    alpha: float,
    params: PhysicalParams = PhysicalParams(),
    withhold_source: bool = False,
) -> StepContext:
    """Context for the step that produces time level ``n`` (BCs and q taken at ``t^n``)."""
    t = time_grid.time(n)
    left, right = boundary_values(sol, grid, t, alpha)
    q = None if withhold_source else sample_source(sol, grid, t, alpha)
    return StepContext(grid, time_grid.dt, params, left, right, q)


def operator_bands(ctx: StepContext) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = ctx.grid.n_cells
    r = ctx.r
    lower = np.full(n - 1, -r)
    upper = np.full(n - 1, -r)
    diag = np.full(n, 1.0 + 2.0 * r)
    # half-cell Dirichlet closure: boundary face gradient taken over dx/2
    diag[0] += r
    diag[-1] += r
    return lower, diag, upper


def build_rhs(ctx: StepContext, prev_interior: np.ndarray) -> np.ndarray:
    """``b(T_prev)``. Accepts a single state ``(n,)`` or a stack ``(n, m)``."""
    prev = np.asarray(prev_interior, dtype=float)
    n = ctx.grid.n_cells
    if prev.shape[0] != n:
        raise ValueError(f"state has {prev.shape[0]} cells, grid has {n}")
    rhs = prev.copy()
    if ctx.source_profile is not None:
        q = ctx.dt * np.asarray(ctx.source_profile, dtype=float) / ctx.params.rho_cv
        if q.ndim < prev.ndim:
            q = q.reshape((n,) + (1,) * (prev.ndim - 1))
        rhs += q
    rhs[0] += 2.0 * ctx.r * ctx.bc_left
    rhs[-1] += 2.0 * ctx.r * ctx.bc_right
    return rhs


def assemble(ctx: StepContext, prev_interior: np.ndarray) -> TridiagonalSystem:
    lower, diag, upper = operator_bands(ctx)
    return TridiagonalSystem(lower, diag, upper, build_rhs(ctx, prev_interior))


def tridiag_matvec(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    shape = (-1,) + (1,) * (v.ndim - 1)
    out = diag.reshape(shape) * v
    out[1:] += lower.reshape(shape) * v[:-1]
    out[:-1] += upper.reshape(shape) * v[1:]
    return out


def thomas(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Thomas algorithm without pivoting.

    ``rhs`` may be ``(n,)`` or ``(n, m)``; columns are solved together.
    """
    n = len(diag)
    d = np.array(rhs, dtype=float)
    if d.shape[0] != n:
        raise ValueError(f"rhs has {d.shape[0]} rows, system has {n}")
    c = np.empty(max(n - 1, 0))
    pivot = diag[0]
    if abs(pivot) < PIVOT_TOL:
        raise SingularSystemError("zero pivot in row 0")
    if n > 1:
        c[0] = upper[0] / pivot
    d[0] = d[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - lower[i - 1] * c[i - 1]
        if abs(pivot) < PIVOT_TOL:
            raise SingularSystemError(f"zero pivot in row {i}")
        if i < n - 1:
            c[i] = upper[i] / pivot
        d[i] = (d[i] - lower[i - 1] * d[i - 1]) / pivot
    for i in range(n - 2, -1, -1):
        d[i] -= c[i] * d[i + 1]
    return d


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    return thomas(sys.lower, sys.diag, sys.upper, sys.rhs)


def pbm_step(ctx: StepContext, prev_interior: np.ndarray) -> np.ndarray:
    return solve_tridiagonal(assemble(ctx, prev_interior))


def predictor_step(ctx: StepContext, prev_interior: np.ndarray) -> np.ndarray:
    """Uncorrected advance of the hybrid state; same map as :func:`pbm_step`."""
    return pbm_step(ctx, prev_interior)


def corrective_source(ctx: StepContext, ref_next: np.ndarray, ref_prev: np.ndarray) -> np.ndarray:
    """Residual ``A @ ref_next - b(ref_prev)`` of the reference under the discrete step.

    Vectorized over trailing columns when given ``(n, m)`` stacks.
    """
    ref_next = np.asarray(ref_next, dtype=float)
    if ref_next.shape != np.shape(ref_prev):
        raise ValueError("ref_next and ref_prev must have the same shape")
    lower, diag, upper = operator_bands(ctx)
    if ref_next.shape[0] != len(diag):
        raise ValueError(f"state has {ref_next.shape[0]} cells, grid has {len(diag)}")
    return tridiag_matvec(lower, diag, upper, ref_next) - build_rhs(ctx, ref_prev)


def ham_step(ctx: StepContext, prev_interior: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (ctx.grid.n_cells,):
        raise ValueError(f"sigma must have shape ({ctx.grid.n_cells},), got {sigma.shape}")
    sys = assemble(ctx, prev_interior)
    return thomas(sys.lower, sys.diag, sys.upper, sys.rhs + sigma)
