"""``costa`` command line: gen-data, train, evaluate, reproduce, inspect.

A run directory holds one subdirectory per stage::

    RUN/config.toml            resolved configuration
    RUN/data/                  train.costads, val.costads, manifest.json
    RUN/models/                {ddm,ham}.ckpt, *_history.json, *_train.log, *_manifest.json
    RUN/report/                CSV/SVG exports, summary.json, manifest.json
    RUN/report-oracle/         same, HAM driven by the exact corrective source
    RUN/manifest.json          written by ``reproduce``

A stage refuses to write into output that already exists, so earlier results
are never modified.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, ExperimentConfig
from .container import FormatError
from .datagen import generate_dataset, describe_dataset, load_dataset, normalize_dataset, save_dataset
from .evaluation import NetworkModel, RunReport, evaluate, export_report
from .mms import DomainError
from .fvm import SingularSystemError
from .neural import Mlp, load_checkpoint, save_checkpoint
from .training import IO_FIELDS, Mode, TrainingDiverged, train, write_history

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class OutputExistsError(OSError):
    pass


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _fresh(path: Path) -> Path:
    if path.exists():
        raise OutputExistsError(f"{path} already exists; refusing to overwrite a previous run")
    return path


def _hashes(root: Path, paths) -> dict[str, str]:
    return {str(Path(p).relative_to(root)): sha256_file(p) for p in sorted(paths)}


def write_config(run: Path, cfg: ExperimentConfig) -> Path:
    run.mkdir(parents=True, exist_ok=True)
    path = run / "config.toml"
    text = cfg.dumps()
    if path.exists():
        if path.read_text() != text:
            raise OutputExistsError(f"{path} exists with a different configuration")
        return path
    path.write_text(text)
    return path


def cmd_gen_data(cfg: ExperimentConfig, run: Path, out=None) -> dict[str, int]:
    write_config(run, cfg)
    data = run / "data"
    _fresh(data)
    sol, grid, tg = cfg.manufactured, cfg.grid, cfg.time_grid
    train_raw = generate_dataset(sol, grid, tg, cfg.alpha_train, cfg.withhold_source)
    val_raw = generate_dataset(sol, grid, tg, cfg.alpha_val, cfg.withhold_source)
    train_ds, val_ds, _ = normalize_dataset(train_raw, val_raw)
    data.mkdir(parents=True)
    save_dataset(train_ds, data / "train.costads")
    save_dataset(val_ds, data / "val.costads")
    counts = {"train": len(train_ds), "val": len(val_ds)}
    _write_json(
        data / "manifest.json",
        {"stage": "gen-data", "config": cfg.to_dict(), "counts": counts,
         "artifacts": _hashes(run, [data / "train.costads", data / "val.costads"])},
    )
    print(f"train: {counts['train']}, val: {counts['val']}", file=out)
    return counts


def cmd_train(cfg: ExperimentConfig, run: Path, mode: Mode | str, out=None) -> Path:
    mode = Mode(mode)
    data = run / "data"
    if not (data / "train.costads").exists():
        raise FileNotFoundError(f"no dataset in {data}; run gen-data first")
    models = run / "models"
    models.mkdir(parents=True, exist_ok=True)
    ckpt = _fresh(models / f"{mode.value}.ckpt")
    train_ds = load_dataset(data / "train.costads")
    val_ds = load_dataset(data / "val.costads")
    if train_ds.metadata.get("n_cells") != cfg.n_cells:
        raise ConfigError(f"n_cells: config has {cfg.n_cells}, dataset was generated with {train_ds.metadata.get('n_cells')}")

    tcfg = cfg.train_config(mode)
    init = Mlp.init(cfg.layer_dims, seed=np.random.default_rng([tcfg.seed, 1]), slope=cfg.slope)
    trained, history = train(train_ds, val_ds, init, tcfg)
    inp, tgt = IO_FIELDS[mode]
    meta = {"mode": mode.value, "seed": tcfg.seed, "best_iteration": history.best_iteration,
            "stop_reason": history.stop_reason}
    save_checkpoint(ckpt, trained, train_ds.norm_stats[inp], train_ds.norm_stats[tgt], meta)
    write_history(history, models / f"{mode.value}_train.log", models / f"{mode.value}_history.json")
    _write_json(
        models / f"{mode.value}_manifest.json",
        {"stage": "train", "mode": mode.value, "config": cfg.to_dict(), "train_config": {
            **{k: getattr(tcfg, k) for k in ("learning_rate", "batch_size", "validation_period", "overfit_limit",
                                              "max_iterations", "seed")}, "mode": mode.value},
         "inputs": _hashes(run, [data / "train.costads", data / "val.costads"]),
         "artifacts": _hashes(run, [ckpt, models / f"{mode.value}_history.json"])},
    )
    print(f"{mode.value}: stopped ({history.stop_reason}) best validation loss {history.best_val_loss:.6g} "
          f"at iteration {history.best_iteration}", file=out)
    return ckpt


def _load_model(path: Path, cfg: ExperimentConfig) -> NetworkModel:
    net, in_stats, out_stats, _ = load_checkpoint(path)
    if net.layer_dims[0] != cfg.n_cells + 2 or net.layer_dims[-1] != cfg.n_cells:
        raise ConfigError(f"n_cells: checkpoint {path.name} has widths {net.layer_dims[0]}->{net.layer_dims[-1]}, "
                          f"config needs {cfg.n_cells + 2}->{cfg.n_cells}")
    return NetworkModel(net, in_stats, out_stats)


def report_summary(report: RunReport) -> dict:
    results = []
    for r in report.results:
        results.append({
            "alpha": r.alpha,
            "tag": r.tag,
            "final_error": {m: (None if v.diverged_at is not None else float(v.errors[-1])) for m, v in r.methods.items()},
            "diverged_at": {m: v.diverged_at for m, v in r.methods.items()},
            "predictions": {m: int(len(v.errors)) for m, v in r.methods.items()},
        })
    return {"solution": report.solution_id, "withhold_source": report.withhold_source, "results": results,
            "metadata": report.metadata}


def cmd_evaluate(cfg: ExperimentConfig, run: Path, oracle_sigma: bool = False, pbm_only: bool = False,
                 out=None) -> RunReport:
    run.mkdir(parents=True, exist_ok=True)
    dest = _fresh(run / ("report-oracle" if oracle_sigma else "report"))
    models = run / "models"
    ddm = ham = None
    used = []
    if not pbm_only:
        if (models / "ddm.ckpt").exists():
            ddm = _load_model(models / "ddm.ckpt", cfg)
            used.append(models / "ddm.ckpt")
        if not oracle_sigma and (models / "ham.ckpt").exists():
            ham = _load_model(models / "ham.ckpt", cfg)
            used.append(models / "ham.ckpt")
    checkpoints = _hashes(run, used)
    report = evaluate(
        cfg.manufactured, cfg.grid, cfg.time_grid, cfg.alpha_test,
        withhold_source=cfg.withhold_source, ddm=ddm, ham=ham, use_oracle_sigma=oracle_sigma,
        train_alphas=cfg.alpha_train, workers=cfg.workers,
        metadata={"checkpoints": checkpoints, "oracle_sigma": oracle_sigma, "seed": cfg.seed},
    )
    files = export_report(report, dest)
    summary = report_summary(report)
    _write_json(dest / "summary.json", summary)
    files.append(dest / "summary.json")
    _write_json(dest / "manifest.json",
                {"stage": "evaluate", "config": cfg.to_dict(), "inputs": checkpoints, "artifacts": _hashes(run, files)})
    for r in summary["results"]:
        errs = ", ".join(f"{m}={e:.3e}" if e is not None else f"{m}=diverged" for m, e in r["final_error"].items())
        print(f"alpha={r['alpha']:g} ({r['tag']}): {errs}", file=out)
    return report


def cmd_reproduce(tag: str, run: Path, overrides: dict | None = None, out=None) -> Path:
    cfg = cfgmod.preset(tag)
    if overrides:
        cfg = cfgmod.from_dict(overrides, cfg)
    _fresh(run / "manifest.json")
    cmd_gen_data(cfg, run, out)
    cmd_train(cfg, run, Mode.DDM, out)
    cmd_train(cfg, run, Mode.HAM, out)
    cmd_evaluate(cfg, run, out=out)
    artifacts = [p for p in run.rglob("*") if p.is_file()]
    _write_json(run / "manifest.json",
                {"stage": "reproduce", "tag": tag, "config": cfg.to_dict(), "artifacts": _hashes(run, artifacts)})
    return run / "manifest.json"


def cmd_inspect(path: Path, out=None) -> None:
    magic = path.read_bytes()[:8]
    if magic == b"COSTANN\x00":
        net, in_stats, out_stats, meta = load_checkpoint(path)
        print(f"checkpoint: layer_dims={list(net.layer_dims)} slope={net.slope}", file=out)
        for key in sorted(meta):
            print(f"{key}: {meta[key]}", file=out)
    else:
        print(describe_dataset(load_dataset(path)), file=out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment configuration")
    common.add_argument("--out", type=Path, default=Path("runs/default"), help="run directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--solution")
    common.add_argument("--max-iterations", type=int)
    common.add_argument("--n-levels", type=int)
    common.add_argument("--n-cells", type=int)
    common.add_argument("--withhold-source", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(prog="costa", description="Corrective source term experiments for 1D heat diffusion")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="generate normalized train/val datasets")
    p = sub.add_parser("train", parents=[common], help="train a DDM or HAM network")
    p.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    p = sub.add_parser("evaluate", parents=[common], help="roll out PBM/DDM/HAM on the test alphas")
    p.add_argument("--oracle-sigma", action="store_true", help="drive HAM with the exact corrective source")
    p.add_argument("--pbm-only", action="store_true", help="ignore any checkpoints")
    p = sub.add_parser("reproduce", parents=[common], help="run a preset end to end")
    p.add_argument("tag", choices=sorted(cfgmod.PRESETS))
    p = sub.add_parser("inspect", help="describe a dataset or checkpoint file")
    p.add_argument("path", type=Path)
    return parser


def _overrides(args) -> dict:
    keys = ("seed", "solution", "max_iterations", "n_levels", "n_cells", "withhold_source", "workers")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = cfgmod.loads(args.config.read_text())
    elif (args.out / "config.toml").exists():
        cfg = cfgmod.loads((args.out / "config.toml").read_text())
    else:
        cfg = ExperimentConfig()
    return cfgmod.from_dict(_overrides(args), cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "inspect":
            cmd_inspect(args.path)
        elif args.command == "reproduce":
            overrides = _overrides(args)
            if args.config is not None:
                overrides = {**cfgmod.loads(args.config.read_text(), cfgmod.preset(args.tag)).to_dict(), **overrides}
            cmd_reproduce(args.tag, args.out, overrides)
        else:
            cfg = resolve_config(args)
            if args.command == "gen-data":
                cmd_gen_data(cfg, args.out)
            elif args.command == "train":
                cmd_train(cfg, args.out, args.mode)
            elif args.command == "evaluate":
                cmd_evaluate(cfg, args.out, oracle_sigma=args.oracle_sigma, pbm_only=args.pbm_only)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingDiverged, SingularSystemError, DomainError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, FormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
