"""
Training DDM and HAM networks and comparing rollouts
====================================================

A compact version of the full pipeline: generate one-step examples for
solution 1 with the source withheld, train a data-driven model (state ->
next state) and a hybrid model (predictor -> corrective source), then roll
all three models out autonomously on the test alphas. The budget here is
small so the script finishes in about a minute; ``costa reproduce s1`` runs
the full-size experiment.
"""

import numpy as np

from costa.datagen import generate_dataset, normalize_dataset
from costa.evaluation import NetworkModel, evaluate, export_report
from costa.mms import ALPHA_TEST, ALPHA_TRAIN, ALPHA_VAL, SpatialGrid, TimeGrid, get_solution
from costa.neural import Mlp
from costa.training import IO_FIELDS, Mode, TrainConfig, train

sol, grid, time_grid = get_solution("1"), SpatialGrid(), TimeGrid()

# %%
# 16 training alphas x 5000 steps = 80 000 examples; 2 validation alphas.
train_raw = generate_dataset(sol, grid, time_grid, ALPHA_TRAIN, withhold_source=True)
val_raw = generate_dataset(sol, grid, time_grid, ALPHA_VAL, withhold_source=True)
train_ds, val_ds, stats = normalize_dataset(train_raw, val_raw)
print(f"{len(train_ds)} training / {len(val_ds)} validation examples")

# %%
# Train both networks with the same architecture (22-80-80-80-80-20).
models = {}
for mode, seed in ((Mode.DDM, 0), (Mode.HAM, 1)):
    init = Mlp.init(seed=np.random.default_rng([seed, 1]))
    net, history = train(train_ds, val_ds, init, TrainConfig(max_iterations=20_000, seed=seed, mode=mode))
    print(f"{mode.value}: best validation loss {history.best_val_loss:.3e} at iteration {history.best_iteration}")
    inp, tgt = IO_FIELDS[mode]
    models[mode] = NetworkModel(net, stats[inp], stats[tgt])

# %%
# Autonomous rollouts: every model advances from its own previous state.
report = evaluate(sol, grid, time_grid, ALPHA_TEST, withhold_source=True, ddm=models[Mode.DDM], ham=models[Mode.HAM])
for r in report.results:
    errs = "  ".join(f"{m.upper()} {report.final_error(m, r.alpha):.2e}" for m in ("pbm", "ddm", "ham"))
    print(f"alpha = {r.alpha:5.2f} ({r.tag:13s})  {errs}")

# %%
# CSV series and SVG plots for each alpha.
paths = export_report(report, "demo_report")
print(f"wrote {len(paths)} files to demo_report/")
