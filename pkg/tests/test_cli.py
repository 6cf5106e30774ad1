import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ctae.cli import EXIT_DIVERGED, EXIT_IO, EXIT_OK, EXIT_USAGE, main, run
from ctae.cli.configfile import SCHEMAS, ConfigError, format_config, parse_config
from ctae.datasets import load_dataset, load_ground_truth
from ctae.trainer import load_checkpoint

SYNTH_CFG = """\
n_trials = 40
n_timesteps = 8
channels = 6,6
subset_sizes = 11:2,10:1,01:1
n_conditions = 4
"""

TRAIN_CFG = """\
subset_sizes = 11:2,10:1,01:1
d_model = 8
n_heads = 2
d_ff = 16
epochs = 50
lr = 1e-3
warmup = 5
batch_size = 8
"""


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip().splitlines()
    return code, (out[-1] if out else None)


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.setenv("CTAE_OUTPUT_ROOT", str(tmp_path / "runs"))
    (tmp_path / "synth.cfg").write_text(SYNTH_CFG)
    (tmp_path / "train.cfg").write_text(TRAIN_CFG)
    return tmp_path


@pytest.fixture
def synth_run(workspace, capsys):
    code, run_dir = cli(capsys, "synth", "--config", str(workspace / "synth.cfg"))
    assert code == EXIT_OK
    return run_dir


def test_config_parsing():
    values = parse_config("d_model = 16  # comment\n\nbatch_size = none\n", SCHEMAS["train"])
    assert values["d_model"] == 16 and values["batch_size"] is None
    assert values["lambda_align"] == 0.5
    assert parse_config(format_config(values), SCHEMAS["train"]) == values
    for bad in ("bogus = 1", "d_model = x", "d_model = 1\nd_model = 2", "d_model 16"):
        with pytest.raises(ConfigError):
            parse_config(bad, SCHEMAS["train"])


def test_synth_outputs_and_determinism(workspace, capsys, synth_run):
    recs = load_dataset(os.path.join(synth_run, "data.ctae"))
    truth = load_ground_truth(os.path.join(synth_run, "truth.ctae"))
    assert len(recs) == 2 and recs[0].values.shape == (40, 6, 8)
    assert truth.latents.shape == (40, 4, 8)
    manifest = json.load(open(os.path.join(synth_run, "manifest.json")))
    assert manifest["exit_status"] == 0 and manifest["command"] == "synth"
    assert {"started", "finished", "version", "config", "seed"} <= set(manifest)
    _, again = cli(capsys, "synth", "--config", str(workspace / "synth.cfg"),
                   "--out", str(workspace / "again"))
    for name in ("data.ctae", "truth.ctae"):
        assert (open(os.path.join(synth_run, name), "rb").read()
                == open(os.path.join(again, name), "rb").read())


def test_synth_three_regions(workspace, capsys):
    codes = ["111", "110", "101", "011", "100", "010", "001"]
    cfg = workspace / "r3.cfg"
    cfg.write_text("n_regions = 3\nchannels = 10,10,10\nn_trials = 20\n"
                   f"subset_sizes = {','.join(c + ':1' for c in codes)}\n")
    code, run_dir = cli(capsys, "synth", "--config", str(cfg))
    assert code == EXIT_OK
    assert len(load_dataset(os.path.join(run_dir, "data.ctae"))) == 3
    truth = load_ground_truth(os.path.join(run_dir, "truth.ctae"))
    assert truth.mask.codes() == codes


def test_train_eval_and_replay(workspace, capsys, synth_run):
    data = os.path.join(synth_run, "data.ctae")
    code, train_dir = cli(capsys, "train", "--config", str(workspace / "train.cfg"),
                          "--data", data)
    assert code == EXIT_OK
    record = load_checkpoint(os.path.join(train_dir, "checkpoint.ckpt"))
    assert record.epoch == 50
    with open(os.path.join(train_dir, "log.csv")) as fh:
        assert len(list(csv.DictReader(fh))) == 51
    code, replay_dir = cli(capsys, "replay", os.path.join(train_dir, "manifest.json"))
    assert code == EXIT_OK and replay_dir != train_dir
    for name in ("log.csv", "checkpoint.ckpt", "summary.json", "config.resolved"):
        assert (open(os.path.join(train_dir, name), "rb").read()
                == open(os.path.join(replay_dir, name), "rb").read())

    code, eval_dir = cli(capsys, "eval", "--checkpoint",
                         os.path.join(train_dir, "checkpoint.ckpt"), "--data", data,
                         "--truth", os.path.join(synth_run, "truth.ctae"),
                         "--subspace", "shared", "--subspace", "private-1",
                         "--time-resolved")
    assert code == EXIT_OK
    report = json.load(open(os.path.join(eval_dir, "eval.json")))
    for name in ("shared", "private-1"):
        confusion = np.array(report["subspaces"][name]["discrete"]["confusion"])
        assert np.allclose(confusion.sum(axis=1), 1.0, atol=1e-9)
    assert "recovery" in report
    manifest = json.load(open(os.path.join(eval_dir, "manifest.json")))
    dims = manifest["feature_dims"]
    assert set(dims["shared"]).isdisjoint(dims["private-1"])
    with open(os.path.join(eval_dir, "curve_shared.csv")) as fh:
        assert len(list(csv.DictReader(fh))) == 8
    code, eval_again = cli(capsys, "replay", os.path.join(eval_dir, "manifest.json"))
    for name in os.listdir(eval_dir):
        if name != "manifest.json":
            assert (open(os.path.join(eval_dir, name), "rb").read()
                    == open(os.path.join(eval_again, name), "rb").read())


def test_train_zero_epochs_and_regions(workspace, capsys, synth_run):
    data = os.path.join(synth_run, "data.ctae")
    code, run_dir = cli(capsys, "train", "--config", str(workspace / "train.cfg"),
                        "--data", data, "--epochs-override", "0", "--seed", "3")
    assert code == EXIT_OK
    record = load_checkpoint(os.path.join(run_dir, "checkpoint.ckpt"))
    assert record.epoch == 0 and record.adam.step == 0
    assert all(np.array_equal(record.params[k], record.best_params[k]) for k in record.params)
    assert record.config.seed == 3


def test_grid_command(workspace, capsys, synth_run):
    cfg = workspace / "grid.cfg"
    cfg.write_text(TRAIN_CFG + "grid_lr = 1e-3,3e-3\ngrid_epochs = 3\n")
    code, run_dir = cli(capsys, "grid", "--config", str(cfg), "--data",
                        os.path.join(synth_run, "data.ctae"))
    assert code == EXIT_OK
    rows = json.load(open(os.path.join(run_dir, "grid.json")))
    assert len(rows) == 2
    assert rows[0]["val_loss"] <= rows[1]["val_loss"]
    assert len(rows[0]["val_losses"]) == 4
    assert os.path.exists(os.path.join(run_dir, "best.ckpt"))


def test_ablate_command(workspace, capsys, synth_run):
    cfg = workspace / "ablate.cfg"
    cfg.write_text(TRAIN_CFG.replace("epochs = 50", "epochs = 3") + "folds = 2\n")
    code, run_dir = cli(capsys, "ablate", "--config", str(cfg), "--data",
                        os.path.join(synth_run, "data.ctae"))
    assert code == EXIT_OK
    with open(os.path.join(run_dir, "ablation.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["variant"] for r in rows] == ["full", "no_shared", "no_align", "no_orth"]
    assert {"shared_mean", "private-1_mean", "private-2_mean"} <= set(rows[0])


def test_exit_codes(workspace, capsys, synth_run):
    bad = workspace / "bad.cfg"
    bad.write_text("not_a_key = 1\n")
    assert cli(capsys, "train", "--config", str(bad), "--data", "x")[0] == EXIT_USAGE
    assert cli(capsys, "train", "--config", str(workspace / "missing.cfg"),
               "--data", "x")[0] == EXIT_IO
    code, _ = cli(capsys, "train", "--config", str(workspace / "train.cfg"),
                  "--data", str(workspace / "missing.ctae"))
    assert code == EXIT_IO
    junk = workspace / "junk.ctae"
    junk.write_bytes(b"garbage")
    code, _ = cli(capsys, "train", "--data", str(junk))
    assert code == EXIT_IO
    diverge = workspace / "diverge.cfg"
    diverge.write_text(TRAIN_CFG.replace("lr = 1e-3", "lr = 1e200") + "clip_norm = 1e300\n")
    with np.errstate(all="ignore"):
        code, run_dir = cli(capsys, "train", "--config", str(diverge), "--data",
                            os.path.join(synth_run, "data.ctae"))
    assert code == EXIT_DIVERGED
    assert "non-finite" in json.load(open(os.path.join(run_dir, "manifest.json")))["error"]
    with pytest.raises(SystemExit) as info:
        main(["train"])
    assert info.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ctae", "--version"], capture_output=True,
                         text=True, check=True)
    assert out.stdout.startswith("ctae ")
