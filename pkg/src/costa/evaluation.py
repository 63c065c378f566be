"""Autonomous multi-step rollouts of PBM, DDM and HAM, and their reports.

Each model starts from the exact initial profile and then advances from its
own previous state. The manufactured solution is consulted after ``n = 0``
only for boundary values, the source term (when known) and error metrics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import svgplot
from .fvm import corrective_source, ham_step, pbm_step, predictor_step, step_context
from .mms import (
    ALPHA_TRAIN,
    ManufacturedSolution,
    PhysicalParams,
    SpatialGrid,
    TimeGrid,
    boundary_values,
    sample_profile,
)
from .neural import Mlp, NormStats, forward

METHODS = ("pbm", "ddm", "ham")
BLOWUP_LIMIT = 1e12


def l2_norm(v: np.ndarray) -> float:
    """``(1/N) * sqrt(sum v_i^2)``."""
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(np.sum(v * v)) / v.size)


def relative_l2(v: np.ndarray, ref: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if v.shape != ref.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {ref.shape}")
    denom = l2_norm(ref)
    if denom == 0:
        raise ZeroDivisionError("reference vector has zero norm")
    return l2_norm(v - ref) / denom


@dataclass(frozen=True)
class NetworkModel:
    """A trained network together with the statistics it was trained under."""

    net: Mlp
    input_stats: NormStats
    target_stats: NormStats

    def __call__(self, raw_input: np.ndarray) -> np.ndarray:
        return self.target_stats.denormalize(forward(self.net, self.input_stats.normalize(raw_input)))


# (level n, predictor with boundaries at t^n) -> sigma for the step producing level n
SigmaModel = Callable[[int, np.ndarray], np.ndarray]


def oracle_sigma(sol, grid, time_grid, alpha, params=PhysicalParams(), withhold_source=False) -> SigmaModel:
    """Exact corrective source computed from the reference profiles."""

    def model(n: int, _predicted: np.ndarray) -> np.ndarray:
        ctx = step_context(sol, grid, time_grid, n, alpha, params, withhold_source)
        ref_next = sample_profile(sol, grid, time_grid.time(n), alpha)
        ref_prev = sample_profile(sol, grid, time_grid.time(n - 1), alpha)
        return corrective_source(ctx, ref_next, ref_prev)

    return model


def network_sigma(model: NetworkModel) -> SigmaModel:
    return lambda _n, predicted: model(predicted)


def zero_sigma(_n: int, predicted: np.ndarray) -> np.ndarray:
    return np.zeros(len(predicted) - 2)


@dataclass
class MethodResult:
    errors: np.ndarray
    final_profile: np.ndarray | None
    diverged_at: int | None = None


@dataclass
class AlphaResult:
    alpha: float
    tag: str
    x: np.ndarray
    exact_final: np.ndarray
    methods: dict[str, MethodResult] = field(default_factory=dict)


@dataclass
class RunReport:
    solution_id: str
    withhold_source: bool
    n_cells: int
    n_levels: int
    t0: float
    dt: float
    results: list[AlphaResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def result(self, alpha: float) -> AlphaResult:
        for r in self.results:
            if np.isclose(r.alpha, alpha, rtol=0, atol=1e-12):
                return r
        raise KeyError(alpha)

    def final_error(self, method: str, alpha: float) -> float:
        m = self.result(alpha).methods[method]
        if m.diverged_at is not None:
            return float("inf")
        return float(m.errors[-1])


def scenario_tag(alpha: float, train_alphas: Sequence[float] = ALPHA_TRAIN) -> str:
    lo, hi = min(train_alphas), max(train_alphas)
    return "interpolation" if lo <= alpha <= hi else "extrapolation"


class _Tracker:
    def __init__(self, n_steps: int):
        self.errors = np.empty(n_steps)
        self.state: np.ndarray | None = None
        self.diverged_at: int | None = None

    @property
    def active(self) -> bool:
        return self.diverged_at is None

    def record(self, n: int, state: np.ndarray, ref: np.ndarray) -> None:
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > BLOWUP_LIMIT:
            self.diverged_at = n
            self.errors = self.errors[: n - 1]
            return
        self.state = state
        self.errors[n - 1] = relative_l2(state, ref)

    def result(self) -> MethodResult:
        return MethodResult(self.errors, None if self.diverged_at is not None else self.state, self.diverged_at)


def rollout(
    sol: ManufacturedSolution,
    grid: SpatialGrid,
    time_grid: TimeGrid,
    alpha: float,
    *,
    params: PhysicalParams = PhysicalParams(),
    withhold_source: bool = False,
    ddm: Callable[[np.ndarray], np.ndarray] | None = None,
    ham: SigmaModel | None = None,
    train_alphas: Sequence[float] = ALPHA_TRAIN,
) -> AlphaResult:
    """Run PBM (always), DDM (if ``ddm`` given) and HAM (if ``ham`` given) for one alpha.

    ``ddm`` maps the previous state with boundaries (``n_cells + 2``) to the
    next interior state. ``ham`` maps the predictor with boundaries to sigma.
    A method whose state becomes non-finite or exceeds ``BLOWUP_LIMIT`` is
    stopped and flagged; the others continue.
    """
    steps = time_grid.n_levels - 1
    initial = sample_profile(sol, grid, time_grid.time(0), alpha)
    trackers = {"pbm": _Tracker(steps)}
    if ddm is not None:
        trackers["ddm"] = _Tracker(steps)
    if ham is not None:
        trackers["ham"] = _Tracker(steps)
    for tr in trackers.values():
        tr.state = initial.copy()

    bc_prev = boundary_values(sol, grid, time_grid.time(0), alpha)
    for n in range(1, steps + 1):
        ctx = step_context(sol, grid, time_grid, n, alpha, params, withhold_source)
        ref = sample_profile(sol, grid, time_grid.time(n), alpha)
        pbm = trackers["pbm"]
        if pbm.active:
            pbm.record(n, pbm_step(ctx, pbm.state), ref)
        if ddm is not None and trackers["ddm"].active:
            tr = trackers["ddm"]
            tr.record(n, np.asarray(ddm(np.concatenate(([bc_prev[0]], tr.state, [bc_prev[1]])))), ref)
        if ham is not None and trackers["ham"].active:
            tr = trackers["ham"]
            predicted = predictor_step(ctx, tr.state)
            sigma = ham(n, np.concatenate(([ctx.bc_left], predicted, [ctx.bc_right])))
            tr.record(n, ham_step(ctx, tr.state, sigma), ref)
        bc_prev = (ctx.bc_left, ctx.bc_right)

    return AlphaResult(
        alpha=float(alpha),
        tag=scenario_tag(alpha, train_alphas),
        x=grid.centers,
        exact_final=sample_profile(sol, grid, time_grid.time(steps), alpha),
        methods={name: tr.result() for name, tr in trackers.items()},
    )


def evaluate(
    sol: ManufacturedSolution,
    grid: SpatialGrid,
    time_grid: TimeGrid,
    alphas: Sequence[float],
    *,
    params: PhysicalParams = PhysicalParams(),
    withhold_source: bool = False,
    ddm: NetworkModel | None = None,
    ham: NetworkModel | None = None,
    use_oracle_sigma: bool = False,
    train_alphas: Sequence[float] = ALPHA_TRAIN,
    workers: int = 1,
    metadata: dict | None = None,
) -> RunReport:
    """Roll out every alpha and collect a :class:`RunReport` (results in ``alphas`` order)."""

    def one(alpha: float) -> AlphaResult:
        sigma_model = None
        if use_oracle_sigma:
            sigma_model = oracle_sigma(sol, grid, time_grid, alpha, params, withhold_source)
        elif ham is not None:
            sigma_model = network_sigma(ham)
        return rollout(
            sol,
            grid,
            time_grid,
            alpha,
            params=params,
            withhold_source=withhold_source,
            ddm=ddm,
            ham=sigma_model,
            train_alphas=train_alphas,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, alphas))
    else:
        results = [one(a) for a in alphas]
    return RunReport(
        solution_id=sol.id,
        withhold_source=withhold_source,
        n_cells=grid.n_cells,
        n_levels=time_grid.n_levels,
        t0=time_grid.t0,
        dt=time_grid.dt,
        results=results,
        metadata=dict(metadata or {}),
    )


def _alpha_label(alpha: float) -> str:
    return f"{alpha:g}"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_report(report: RunReport, out_dir: str | Path, max_plot_points: int = 1000) -> list[Path]:
    """Write error-series CSVs, final-profile CSVs and SVG plots. Returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for res in report.results:
        label = _alpha_label(res.alpha)
        curves = {}
        for method in METHODS:
            if method not in res.methods:
                continue
            errors = res.methods[method].errors
            path = out / f"errors_{method}_alpha{label}.csv"
            rows = ["time_level,t_seconds,rel_l2_error"]
            for i, e in enumerate(errors, start=1):
                rows.append(f"{i},{_fmt(report.t0 + i * report.dt)},{_fmt(e)}")
            path.write_text("\n".join(rows) + "\n")
            written.append(path)
            curves[method.upper()] = (np.arange(1, len(errors) + 1), errors)

        path = out / f"profile_alpha{label}.csv"
        rows = ["x,exact,pbm,ddm,ham"]
        for i, x in enumerate(res.x):
            cells = [_fmt(x), _fmt(res.exact_final[i])]
            for method in METHODS:
                m = res.methods.get(method)
                cells.append(_fmt(m.final_profile[i]) if m is not None and m.final_profile is not None else "")
            rows.append(",".join(cells))
        path.write_text("\n".join(rows) + "\n")
        written.append(path)

        title = f"solution {report.solution_id}, alpha = {label} ({res.tag})"
        path = out / f"errors_alpha{label}.svg"
        path.write_text(
            svgplot.line_plot(
                curves, title=title, xlabel="time level n", ylabel="relative l2 error", log_y=True,
                max_points=max_plot_points,
            )
        )
        written.append(path)

        profiles = {"Exact": (res.x, res.exact_final)}
        for method in METHODS:
            m = res.methods.get(method)
            if m is not None and m.final_profile is not None:
                profiles[method.upper()] = (res.x, m.final_profile)
        path = out / f"profile_alpha{label}.svg"
        path.write_text(
            svgplot.line_plot(profiles, title=title + ", final time level", xlabel="x [m]", ylabel="T", markers=True)
        )
        written.append(path)
    return written
