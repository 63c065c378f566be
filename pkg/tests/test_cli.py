import io
import json

import numpy as np
import pytest

from costa import config as cfgmod
from costa.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    OutputExistsError,
    cmd_evaluate,
    cmd_gen_data,
    cmd_train,
    main,
)
from costa.config import ConfigError, ExperimentConfig
from costa.datagen import load_dataset
from costa.mms import ALPHA_TEST, ALPHA_TRAIN, ALPHA_VAL
from costa.neural import Mlp, load_checkpoint
from costa.training import Mode

TINY = dict(solution="2", n_cells=5, n_levels=11, t_end=0.1, hidden_layers=2, hidden_width=8,
            learning_rate=1e-3, validation_period=5, max_iterations=40)


def tiny(**kw):
    return cfgmod.from_dict({**TINY, **kw})


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.alpha_train == ALPHA_TRAIN and cfg.alpha_val == ALPHA_VAL and cfg.alpha_test == ALPHA_TEST
    assert cfg.layer_dims == (22, 80, 80, 80, 80, 20)
    assert cfg.n_levels == 5001 and cfg.n_cells == 20
    assert cfg.mode_seed(Mode.DDM) != cfg.mode_seed(Mode.HAM)


def test_config_round_trip():
    cfg = tiny(seed=11, alpha_test=[-0.25, 3.0], withhold_source=False)
    text = cfg.dumps()
    again = cfgmod.loads(text)
    assert again == cfg
    assert again.dumps() == text


@pytest.mark.parametrize(
    "text, field",
    [
        ("alpha_test = [0.1, 2.5]\n", "alpha_train/alpha_test"),
        ("alpha_val = [0.8]\nalpha_test = [0.8]\n", "alpha_val/alpha_test"),
        ("n_cells = 2\n", "n_cells"),
        ("n_levels = 1\n", "n_levels"),
        ("solution = \"9\"\n", "solution"),
        ("seed = \"x\"\n", "seed"),
        ("bogus = 1\n", "bogus"),
        ("seed = \n", "syntax"),
    ],
)
def test_config_rejections_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field):
        cfgmod.loads(text)


def test_presets():
    assert cfgmod.preset("s1").withhold_source is True and cfgmod.preset("s1").n_cells == 20
    assert cfgmod.preset("s0").withhold_source is False
    assert cfgmod.preset("s3-fine").n_cells == 200
    assert {cfgmod.preset(t).solution for t in ("s0", "s1", "s2", "s3", "s4")} == {"0", "1", "2", "3", "4"}
    with pytest.raises(ConfigError):
        cfgmod.preset("s9")


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(cfgmod.WORKERS_ENV, "3")
    assert ExperimentConfig().workers == 3


def test_gen_data_counts(tmp_path):
    out = io.StringIO()
    counts = cmd_gen_data(tiny(n_levels=3, alpha_train=[0.5], alpha_val=[1.1]), tmp_path / "run", out)
    assert counts == {"train": 2, "val": 2}
    assert out.getvalue().strip() == "train: 2, val: 2"
    ds = load_dataset(tmp_path / "run" / "data" / "train.costads")
    assert ds.normalized and len(ds) == 2


def test_pipeline(tmp_path):
    run, cfg = tmp_path / "run", tiny()
    out = io.StringIO()
    cmd_gen_data(cfg, run, out)
    ham = cmd_train(cfg, run, Mode.HAM, out)
    ddm = cmd_train(cfg, run, Mode.DDM, out)
    assert ham.read_bytes() != ddm.read_bytes()
    report = cmd_evaluate(cfg, run, out=out)
    summary = json.loads((run / "report" / "summary.json").read_text())
    assert [r["alpha"] for r in summary["results"]] == list(ALPHA_TEST)
    assert all(set(r["final_error"]) == {"pbm", "ddm", "ham"} for r in summary["results"])
    assert report.result(0.7).tag == "interpolation"
    manifest = json.loads((run / "report" / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {"models/ddm.ckpt", "models/ham.ckpt"}
    assert manifest["config"] == cfg.to_dict()
    # nothing is overwritten
    with pytest.raises(OutputExistsError):
        cmd_gen_data(cfg, run, out)
    with pytest.raises(OutputExistsError):
        cmd_train(cfg, run, Mode.HAM, out)
    with pytest.raises(OutputExistsError):
        cmd_evaluate(cfg, run, out=out)


def test_train_is_deterministic(tmp_path):
    cfg = tiny(seed=4)
    for name in ("a", "b"):
        cmd_gen_data(cfg, tmp_path / name, io.StringIO())
        cmd_train(cfg, tmp_path / name, Mode.HAM, io.StringIO())
    for f in ("data/train.costads", "models/ham.ckpt", "models/ham_history.json", "models/ham_manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_zero_iterations_checkpoint_is_initialization(tmp_path):
    cfg = tiny(max_iterations=0, seed=9)
    cmd_gen_data(cfg, tmp_path, io.StringIO())
    cmd_train(cfg, tmp_path, Mode.DDM, io.StringIO())
    net, *_ = load_checkpoint(tmp_path / "models" / "ddm.ckpt")
    init = Mlp.init(cfg.layer_dims, seed=np.random.default_rng([cfg.mode_seed(Mode.DDM), 1]))
    assert all(np.array_equal(a, b) for a, b in zip(net.params, init.params))


def test_train_requires_dataset(tmp_path):
    with pytest.raises(FileNotFoundError):
        cmd_train(tiny(), tmp_path, Mode.HAM, io.StringIO())


def test_evaluate_rejects_width_mismatch(tmp_path):
    cfg = tiny()
    cmd_gen_data(cfg, tmp_path, io.StringIO())
    cmd_train(cfg, tmp_path, Mode.DDM, io.StringIO())
    with pytest.raises(ConfigError, match="n_cells"):
        cmd_evaluate(tiny(n_cells=6), tmp_path, out=io.StringIO())


@pytest.mark.parametrize("sid", ["0", "4", "B"])
def test_oracle_sigma_evaluation(tmp_path, sid):
    cfg = tiny(solution=sid, n_levels=501, t_end=0.5)
    report = cmd_evaluate(cfg, tmp_path, oracle_sigma=True, out=io.StringIO())
    for r in report.results:
        assert np.max(r.methods["ham"].errors) <= 1e-8
    assert (tmp_path / "report-oracle" / "summary.json").exists()


def test_pbm_only_full_length(tmp_path):
    cfg = ExperimentConfig(solution="1")
    cmd_evaluate(cfg, tmp_path, pbm_only=True, out=io.StringIO())
    summary = json.loads((tmp_path / "report" / "summary.json").read_text())
    assert sum(r["predictions"]["pbm"] for r in summary["results"]) == 20_000
    assert all(set(r["final_error"]) == {"pbm"} for r in summary["results"])


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_main_exit_codes(tmp_path, capsys):
    good = _write(tmp_path / "good.toml", "\n".join(f"{k} = {json.dumps(v)}" for k, v in TINY.items()) + "\n")
    run = str(tmp_path / "run")
    assert main(["gen-data", "--config", good, "--out", run]) == EXIT_OK
    assert "train: 160, val: 20" in capsys.readouterr().out
    assert main(["gen-data", "--config", good, "--out", run]) == EXIT_IO
    assert main(["train", "--mode", "ham", "--out", run]) == EXIT_OK
    assert main(["evaluate", "--out", run, "--max-iterations", "40"]) == EXIT_OK
    assert main(["inspect", str(tmp_path / "run" / "models" / "ham.ckpt")]) == EXIT_OK
    assert "layer_dims=[7, 8, 8, 5]" in capsys.readouterr().out
    assert main(["inspect", str(tmp_path / "run" / "data" / "val.costads")]) == EXIT_OK
    assert "examples: 20" in capsys.readouterr().out

    bad = _write(tmp_path / "bad.toml", "alpha_test = [0.1]\n")
    assert main(["gen-data", "--config", bad, "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "alpha_train/alpha_test" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()
    assert main(["gen-data", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path / "y")]) == EXIT_IO
    assert main(["inspect", good]) == EXIT_IO

    # the square-root solution is undefined at t + alpha + 1 <= 0
    domain = _write(tmp_path / "domain.toml", 'solution = "2"\nn_levels = 3\nalpha_test = [-1.5]\n')
    assert main(["evaluate", "--pbm-only", "--config", domain, "--out", str(tmp_path / "z")]) == EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err
