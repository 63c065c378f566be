"""One-step training examples built from manufactured solutions.

Every example starts from the exact profile at ``t^{n-1}``, so networks only
ever see local (single-step) errors. An example holds four vectors:

* ``ddm_input``  exact ``T^{n-1}`` with the two boundary temperatures (``n_cells + 2``)
* ``ham_input``  predictor ``T~^n`` with the boundary temperatures at ``t^n`` (``n_cells + 2``)
* ``ddm_target`` exact ``T^n`` (``n_cells``)
* ``ham_target`` corrective source ``sigma^n`` (``n_cells``)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from . import container
from .fvm import StepContext, build_rhs, corrective_source, operator_bands, thomas
from .mms import (
    ManufacturedSolution,
    PhysicalParams,
    SpatialGrid,
    TimeGrid,
    sample_profile,
    sample_source,
)
from .neural import NormStats, fit_norm_stats

FAMILIES = ("ddm_input", "ham_input", "ddm_target", "ham_target")

DATASET_MAGIC = b"COSTADS\x00"
DATASET_VERSION = 1


@dataclass(frozen=True)
class DataExample:
    ddm_input: np.ndarray
    ham_input: np.ndarray
    ddm_target: np.ndarray
    ham_target: np.ndarray
    solution_id: str
    alpha: float
    level: int


@dataclass
class Dataset:
    """Column-stacked examples; row ``i`` of every array belongs to example ``i``.

    ``norm_stats`` is empty for raw data and holds one :class:`NormStats` per
    vector family once the arrays have been normalized.
    """

    ddm_input: np.ndarray
    ham_input: np.ndarray
    ddm_target: np.ndarray
    ham_target: np.ndarray
    alpha: np.ndarray
    level: np.ndarray
    metadata: dict = field(default_factory=dict)
    norm_stats: dict[str, NormStats] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.alpha)

    def __getitem__(self, i: int) -> DataExample:
        return DataExample(
            self.ddm_input[i],
            self.ham_input[i],
            self.ddm_target[i],
            self.ham_target[i],
            str(self.metadata.get("solution_id")),
            float(self.alpha[i]),
            int(self.level[i]),
        )

    @property
    def normalized(self) -> bool:
        return bool(self.norm_stats)

    def family(self, name: str) -> np.ndarray:
        if name not in FAMILIES:
            raise KeyError(name)
        return getattr(self, name)

    def denormalized(self, name: str) -> np.ndarray:
        """Family ``name`` in physical units, whether or not the set is normalized."""
        data = self.family(name)
        return self.norm_stats[name].denormalize(data) if self.normalized else data


def _series(sol, grid, time_grid, alpha, withhold_source):
    """Exact profiles (with boundaries) and sources at every time level."""
    profiles = np.stack(
        [sample_profile(sol, grid, time_grid.time(n), alpha, with_boundaries=True) for n in range(time_grid.n_levels)]
    )
    sources = None
    if not withhold_source:
        sources = np.stack([sample_source(sol, grid, time_grid.time(n), alpha) for n in range(1, time_grid.n_levels)])
    return profiles, sources


def _examples_for_alpha(sol, grid, time_grid, alpha, params, withhold_source):
    profiles, sources = _series(sol, grid, time_grid, alpha, withhold_source)
    prev = profiles[:-1]
    nxt = profiles[1:]
    # one stacked context: column j is the step producing level j + 1
    ctx = StepContext(
        grid,
        time_grid.dt,
        params,
        nxt[:, 0].copy(),
        nxt[:, -1].copy(),
        None if sources is None else sources.T.copy(),
    )
    lower, diag, upper = operator_bands(ctx)
    predicted = thomas(lower, diag, upper, build_rhs(ctx, prev[:, 1:-1].T)).T
    sigma = corrective_source(ctx, nxt[:, 1:-1].T, prev[:, 1:-1].T).T
    ham_input = np.column_stack([nxt[:, 0], predicted, nxt[:, -1]])
    return prev, ham_input, nxt[:, 1:-1], sigma


def generate_dataset(
    sol: ManufacturedSolution,
    grid: SpatialGrid,
    time_grid: TimeGrid,
    alphas: Iterable[float],
    withhold_source: bool = False,
    params: PhysicalParams = PhysicalParams(),
) -> Dataset:
    """Raw (unnormalized) dataset with ``len(alphas) * (n_levels - 1)`` examples.

    Order is alpha-major, then time level ``n = 1 .. n_levels - 1``.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must be nonempty")
    parts = [_examples_for_alpha(sol, grid, time_grid, a, params, withhold_source) for a in alphas]
    steps = time_grid.n_levels - 1
    return Dataset(
        ddm_input=np.concatenate([p[0] for p in parts]),
        ham_input=np.concatenate([p[1] for p in parts]),
        ddm_target=np.concatenate([p[2] for p in parts]),
        ham_target=np.concatenate([p[3] for p in parts]),
        alpha=np.repeat(alphas, steps).astype(float),
        level=np.tile(np.arange(1, steps + 1), len(alphas)),
        metadata={
            "solution_id": sol.id,
            "alphas": alphas,
            "n_cells": grid.n_cells,
            "x_min": grid.x_min,
            "x_max": grid.x_max,
            "n_levels": time_grid.n_levels,
            "t0": time_grid.t0,
            "t_end": time_grid.t_end,
            "rho_cv": params.rho_cv,
            "k": params.k,
            "withhold_source": bool(withhold_source),
        },
    )


def apply_norm_stats(ds: Dataset, stats: dict[str, NormStats]) -> Dataset:
    if ds.normalized:
        raise ValueError("dataset is already normalized")
    return replace(ds, norm_stats=dict(stats), **{name: stats[name].normalize(ds.family(name)) for name in FAMILIES})


def normalize_dataset(train: Dataset, val: Dataset) -> tuple[Dataset, Dataset, dict[str, NormStats]]:
    """Fit per-family statistics on ``train`` and apply them to both sets."""
    if len(train) == 0:
        raise ValueError("training set is empty")
    stats = {name: fit_norm_stats(train.family(name)) for name in FAMILIES}
    return apply_norm_stats(train, stats), apply_norm_stats(val, stats), stats


def _to_arrays(ds: Dataset) -> dict[str, np.ndarray]:
    arrays = {name: ds.family(name) for name in FAMILIES}
    arrays["alpha"] = ds.alpha
    arrays["level"] = ds.level.astype(float)
    for name, st in ds.norm_stats.items():
        arrays[f"{name}.mean"] = st.mean
        arrays[f"{name}.std"] = st.std
    return arrays


def save_dataset(ds: Dataset, path: str | Path) -> None:
    header = {"metadata": ds.metadata, "normalized": ds.normalized}
    container.write(path, DATASET_MAGIC, DATASET_VERSION, header, _to_arrays(ds))


def load_dataset(path: str | Path) -> Dataset:
    header, arrays = container.read(path, DATASET_MAGIC, DATASET_VERSION)
    stats = {}
    if header["normalized"]:
        stats = {name: NormStats(arrays[f"{name}.mean"], arrays[f"{name}.std"]) for name in FAMILIES}
    return Dataset(
        *(arrays[name] for name in FAMILIES),
        alpha=arrays["alpha"],
        level=arrays["level"].astype(np.int64),
        metadata=header["metadata"],
        norm_stats=stats,
    )


def describe_dataset(ds: Dataset) -> str:
    """Plain-text metadata and per-family summary statistics."""
    lines = [f"examples: {len(ds)}", f"normalized: {ds.normalized}"]
    for key in sorted(ds.metadata):
        lines.append(f"{key}: {ds.metadata[key]}")
    lines.append(f"{'family':<12}{'width':>6}{'min':>14}{'max':>14}{'mean':>14}{'std':>14}")
    for name in FAMILIES:
        raw = ds.denormalized(name)
        lines.append(
            f"{name:<12}{raw.shape[1]:>6}{raw.min():>14.6g}{raw.max():>14.6g}{raw.mean():>14.6g}{raw.std():>14.6g}"
        )
    return "\n".join(lines)
