"""Manufactured solutions of the 1D unsteady heat equation.

Each catalog entry pairs a closed-form temperature ``T(x, t; alpha)`` with the
volumetric source ``q(x, t; alpha)`` that makes it an exact solution of

    rho_cv * dT/dt - d/dx(k * dT/dx) = q

with ``rho_cv = k = 1``. Solutions ``"0"``..``"4"`` are used for experiments,
``"A"`` and ``"B"`` for hyperparameter tuning only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

ArrayLike = float | np.ndarray

SOLUTION_IDS = ("0", "1", "2", "3", "4", "A", "B")
EXPERIMENT_SOLUTION_IDS = ("0", "1", "2", "3", "4")

# alpha-sets used for training, validation and testing time series
ALPHA_TRAIN = tuple(
    round(0.1 * i, 1) for i in range(1, 21) if round(0.1 * i, 1) not in (0.7, 0.8, 1.1, 1.5)
)
ALPHA_VAL = (0.8, 1.1)
ALPHA_TEST = (-0.5, 0.7, 1.5, 2.5)


class DomainError(ValueError):
    """Raised when a manufactured solution is evaluated outside its domain."""


@dataclass(frozen=True)
class PhysicalParams:
    rho_cv: float = 1.0
    k: float = 1.0

    def __post_init__(self) -> None:
        if not (self.rho_cv > 0 and self.k > 0):
            raise ValueError("rho_cv and k must be strictly positive")


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centered grid on ``[x_min, x_max]``."""

    n_cells: int = 20
    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self) -> None:
        if self.n_cells < 1:
            raise ValueError("n_cells must be positive")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class TimeGrid:
    """``n_levels`` equally spaced time levels on ``[t0, t_end]``."""

    n_levels: int = 5001
    t0: float = 0.0
    t_end: float = 5.0

    def __post_init__(self) -> None:
        if self.n_levels < 2:
            raise ValueError("n_levels must be at least 2")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / (self.n_levels - 1)

    def time(self, n: int | np.ndarray) -> float | np.ndarray:
        return self.t0 + n * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.time(np.arange(self.n_levels))


@dataclass(frozen=True)
class ManufacturedSolution:
    id: str
    temperature: Callable[[ArrayLike, ArrayLike, float], ArrayLike] = field(repr=False)
    source: Callable[[ArrayLike, ArrayLike, float], ArrayLike] = field(repr=False)


def _sech2(z):
    return 1.0 / np.cosh(z) ** 2


def _sqrt_arg(t, alpha):
    arg = np.asarray(t + alpha + 1.0, dtype=float)
    if np.any(arg <= 0):
        raise DomainError("t + alpha + 1 must be positive")
    return arg


def _t0(x, t, a):
    return a * (t + 0.5 * x**2)


def _q0(x, t, a):
    return np.zeros(np.broadcast(x, t).shape)[()]


def _t1(x, t, a):
    return t + 0.5 * a * x**2


def _q1(x, t, a):
    return np.full(np.broadcast(x, t).shape, 1.0 - a)[()]


def _poly_sqrt_t(scale):
    def temperature(x, t, a):
        return np.sqrt(_sqrt_arg(t, a)) + scale * x**2 * (x - 1) * (x + 2)

    def source(x, t, a):
        # d2/dx2 of scale*(x^4 + x^3 - 2x^2) = scale*(12x^2 + 6x - 4)
        return 0.5 / np.sqrt(_sqrt_arg(t, a)) - scale * (12 * x**2 + 6 * x - 4)

    return temperature, source


def _t3(x, t, a):
    return 2.0 + a * (x - 1) * np.tanh(x / (t + 0.1))


def _q3(x, t, a):
    s = t + 0.1
    z = x / s
    return a / s**2 * (x * (1 - x) + 2 * ((x - 1) * np.tanh(z) - t - 0.1)) * _sech2(z)


def _t4(x, t, a):
    return 1.0 + np.sin(2 * np.pi * t + a) * np.cos(2 * np.pi * x)


def _q4(x, t, a):
    # T_t - T_xx; the diffusion term adds +4*pi^2*sin(w)*cos(2*pi*x)
    w = 2 * np.pi * t + a
    return 2 * np.pi * (np.cos(w) + 2 * np.pi * np.sin(w)) * np.cos(2 * np.pi * x)


def _tb(x, t, a):
    return -(x**3) * (x - a) / (t + 0.1)


def _qb(x, t, a):
    s = t + 0.1
    return (x**4 - a * x**3) / s**2 + (12 * x**2 - 6 * a * x) / s


_t2, _q2 = _poly_sqrt_t(10.0)
_ta, _qa = _poly_sqrt_t(7.0)

SOLUTIONS: dict[str, ManufacturedSolution] = {
    sid: ManufacturedSolution(sid, t_fn, q_fn)
    for sid, t_fn, q_fn in (
        ("0", _t0, _q0),
        ("1", _t1, _q1),
        ("2", _t2, _q2),
        ("3", _t3, _q3),
        ("4", _t4, _q4),
        ("A", _ta, _qa),
        ("B", _tb, _qb),
    )
}


def get_solution(sid: str | int) -> ManufacturedSolution:
    key = str(sid).upper()
    try:
        return SOLUTIONS[key]
    except KeyError:
        raise KeyError(f"unknown manufactured solution {sid!r}; expected one of {SOLUTION_IDS}") from None


def _checked(value, what: str):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{what} is not finite at the requested point(s)")
    return value


def eval_temperature(sol: ManufacturedSolution, x: ArrayLike, t: ArrayLike, alpha: float) -> ArrayLike:
    """Exact temperature. Broadcasts over array-valued ``x`` and ``t``."""
    with np.errstate(all="ignore"):
        value = sol.temperature(np.asarray(x, dtype=float), np.asarray(t, dtype=float), float(alpha))
    return _checked(value, f"T for solution {sol.id}")


def eval_source(sol: ManufacturedSolution, x: ArrayLike, t: ArrayLike, alpha: float) -> ArrayLike:
    """Source term that makes ``sol`` an exact solution of the heat equation."""
    with np.errstate(all="ignore"):
        value = sol.source(np.asarray(x, dtype=float), np.asarray(t, dtype=float), float(alpha))
    return _checked(value, f"q for solution {sol.id}")


def sample_profile(
    sol: ManufacturedSolution,
    grid: SpatialGrid,
    t: float,
    alpha: float,
    with_boundaries: bool = False,
) -> np.ndarray:
    """Exact temperature at the cell centers.

    With ``with_boundaries=True`` the values on the two domain faces are
    prepended/appended, giving ``n_cells + 2`` entries.
    """
    x = grid.centers
    if with_boundaries:
        x = np.concatenate(([grid.x_min], x, [grid.x_max]))
    return np.asarray(eval_temperature(sol, x, t, alpha), dtype=float)


def sample_source(sol: ManufacturedSolution, grid: SpatialGrid, t: float, alpha: float) -> np.ndarray:
    return np.asarray(eval_source(sol, grid.centers, t, alpha), dtype=float) * np.ones(grid.n_cells)


def boundary_values(sol: ManufacturedSolution, grid: SpatialGrid, t: float, alpha: float) -> tuple[float, float]:
    left, right = eval_temperature(sol, np.array([grid.x_min, grid.x_max]), t, alpha)
    return float(left), float(right)


def pde_residual(
    sol: ManufacturedSolution,
    params: PhysicalParams,
    x: ArrayLike,
    t: ArrayLike,
    alpha: float,
    h: float,
) -> np.ndarray:
    """Pointwise ``rho_cv*T_t - k*T_xx - q`` using central differences of step ``h``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    T = lambda xx, tt: eval_temperature(sol, xx, tt, alpha)  # noqa: E731
    dT_dt = (T(x, t + h) - T(x, t - h)) / (2 * h)
    d2T_dx2 = (T(x + h, t) - 2 * T(x, t) + T(x - h, t)) / h**2
    return params.rho_cv * dT_dt - params.k * d2T_dx2 - eval_source(sol, x, t, alpha)


def verify_mms_residual(
    sol: ManufacturedSolution,
    params: PhysicalParams,
    probe_points: Iterable[tuple[float, float, float]],
    h: float,
) -> float:
    """Largest absolute finite-difference PDE residual over ``(x, t, alpha)`` probes."""
    worst = 0.0
    for x, t, alpha in probe_points:
        worst = max(worst, float(abs(pde_residual(sol, params, x, t, alpha, h))))
    return worst
