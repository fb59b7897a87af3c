import csv
import json

import numpy as np
import pytest

from rlabo.cli import main
from rlabo.neural import init_policy, save_checkpoint

TINY_TRAIN = {"M": 1, "N": 2, "T": 2, "K": 1}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_TRAIN))
    return str(path)


def read_rows(path):
    with open(path) as f:
        return list(csv.reader(f))


class TestTrain:
    def test_writes_three_files(self, tmp_path, tiny_config):
        out = tmp_path / "a1"
        rc = main(["train", "--benchmark", "ackley", "--seed", "1",
                   "--out", str(out), "--config", tiny_config])
        assert rc == 0
        assert (out / "checkpoint.json").exists()
        assert (out / "learning_curve.csv").exists()
        assert (out / "manifest.json").exists()

    def test_rerun_identical_checkpoint(self, tmp_path, tiny_config):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert main(["train", "--benchmark", "levy", "--seed", "3",
                         "--out", str(out), "--config", tiny_config]) == 0
        assert (out1 / "checkpoint.json").read_bytes() == (out2 / "checkpoint.json").read_bytes()
        assert (out1 / "learning_curve.csv").read_bytes() == (
            out2 / "learning_curve.csv"
        ).read_bytes()

    def test_rerun_from_manifest(self, tmp_path, tiny_config):
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        assert main(["train", "--benchmark", "griewank", "--seed", "2",
                     "--out", str(out1), "--config", tiny_config]) == 0
        assert main(["train", "--benchmark", "griewank",
                     "--out", str(out2), "--config", str(out1 / "manifest.json")]) == 0
        assert (out1 / "checkpoint.json").read_bytes() == (out2 / "checkpoint.json").read_bytes()

    def test_unknown_benchmark_exit_2(self, capsys):
        rc = main(["train", "--benchmark", "sphere"])
        assert rc == 2
        err = capsys.readouterr().err
        for name in ("ackley", "levy", "griewank", "schwefel", "eggholder"):
            assert name in err

    def test_bad_config_key_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"M": 1, "bogus": 2}))
        rc = main(["train", "--benchmark", "ackley", "--config", str(path)])
        assert rc == 2
        assert "bogus" in capsys.readouterr().err

    def test_manifest_written_before_outputs(self, tmp_path, tiny_config):
        out = tmp_path / "mf"
        assert main(["train", "--benchmark", "ackley", "--seed", "1",
                     "--out", str(out), "--config", tiny_config]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert manifest["seed"] == 1
        assert manifest["config"]["M"] == 1
        assert "checkpoint" in manifest["outputs"]


class TestRun:
    def test_fixed_beta_trace(self, tmp_path):
        out = tmp_path / "run1"
        rc = main(["run", "--fixed-beta", "inf", "--benchmark", "eggholder",
                   "--seed", "3", "--steps", "2", "--out", str(out)])
        assert rc == 0
        rows = read_rows(out / "trace.csv")
        step_rows = [r for r in rows[1:] if r[4] != "init"]
        assert all(r[4] == "inf" for r in step_rows)

    def test_checkpoint_trace_betas_from_candidate_set(self, tmp_path):
        ckpt = tmp_path / "c.json"
        save_checkpoint(ckpt, init_policy(4, np.random.default_rng(0)))
        out = tmp_path / "run2"
        rc = main(["run", "--checkpoint", str(ckpt), "--benchmark", "ackley",
                   "--steps", "3", "--out", str(out)])
        assert rc == 0
        rows = read_rows(out / "trace.csv")
        betas = {r[4] for r in rows[1:] if r[4] != "init"}
        assert betas <= {"0", "1", "2.576", "6.635776", "inf"}

    def test_invalid_beta_exit_2(self, capsys):
        rc = main(["run", "--fixed-beta", "7", "--benchmark", "ackley"])
        assert rc == 2
        assert "2.576" in capsys.readouterr().err

    def test_checkpoint_xor_fixed_beta(self, tmp_path, capsys):
        assert main(["run", "--benchmark", "ackley"]) == 2
        ckpt = tmp_path / "c.json"
        save_checkpoint(ckpt, init_policy(4, np.random.default_rng(0)))
        assert main(["run", "--benchmark", "ackley", "--checkpoint", str(ckpt),
                     "--fixed-beta", "0"]) == 2

    def test_prints_final_best(self, tmp_path, capsys):
        out = tmp_path / "run3"
        main(["run", "--fixed-beta", "0", "--benchmark", "ackley",
              "--seed", "1", "--steps", "1", "--out", str(out)])
        assert "final y* = " in capsys.readouterr().out

    def test_rerun_from_manifest(self, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["run", "--fixed-beta", "2.576", "--benchmark", "levy",
                     "--seed", "9", "--steps", "2", "--out", str(out1)]) == 0
        assert main(["run", "--config", str(out1 / "manifest.json"),
                     "--out", str(out2)]) == 0
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()


class TestCompare:
    @pytest.fixture
    def ckpt_dir(self, tmp_path):
        d = tmp_path / "ckpts"
        d.mkdir()
        for i, name in enumerate(("ackley", "levy")):
            save_checkpoint(d / f"{name}.json", init_policy(4, np.random.default_rng(i)))
        return d

    def test_outputs(self, tmp_path, ckpt_dir):
        out = tmp_path / "cmp"
        rc = main(["compare", "--benchmarks", "ackley,levy", "--checkpoints", str(ckpt_dir),
                   "--seeds", "2", "--steps", "2", "--out", str(out)])
        assert rc == 0
        assert (out / "ackley.csv").exists()
        assert (out / "levy.csv").exists()
        summary = read_rows(out / "summary.csv")
        assert len(summary) == 1 + 2 * 6
        assert (out / "manifest.json").exists()

    def test_missing_checkpoint_names_benchmark(self, tmp_path, ckpt_dir, capsys):
        rc = main(["compare", "--benchmarks", "ackley,schwefel",
                   "--checkpoints", str(ckpt_dir), "--seeds", "1", "--steps", "1",
                   "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "schwefel" in capsys.readouterr().err

    def test_rerun_identical_csvs(self, tmp_path, ckpt_dir):
        outs = [tmp_path / "c1", tmp_path / "c2"]
        for out in outs:
            assert main(["compare", "--benchmarks", "ackley", "--checkpoints", str(ckpt_dir),
                         "--seeds", "2", "--steps", "2", "--seed", "5",
                         "--out", str(out)]) == 0
        assert (outs[0] / "ackley.csv").read_bytes() == (outs[1] / "ackley.csv").read_bytes()
        assert (outs[0] / "summary.csv").read_bytes() == (outs[1] / "summary.csv").read_bytes()

    def test_jobs_flag_preserves_outputs(self, tmp_path, ckpt_dir):
        out1, out2 = tmp_path / "j1", tmp_path / "j2"
        for out, jobs in ((out1, "1"), (out2, "2")):
            assert main(["compare", "--benchmarks", "levy", "--checkpoints", str(ckpt_dir),
                         "--seeds", "2", "--steps", "2", "--jobs", jobs,
                         "--out", str(out)]) == 0
        assert (out1 / "levy.csv").read_bytes() == (out2 / "levy.csv").read_bytes()

    def test_rerun_from_manifest(self, tmp_path, ckpt_dir):
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        assert main(["compare", "--benchmarks", "ackley", "--checkpoints", str(ckpt_dir),
                     "--seeds", "2", "--steps", "2", "--seed", "4",
                     "--out", str(out1)]) == 0
        assert main(["compare", "--config", str(out1 / "manifest.json"),
                     "--out", str(out2)]) == 0
        assert (out1 / "ackley.csv").read_bytes() == (out2 / "ackley.csv").read_bytes()
        assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()


class TestBench:
    def test_prints_values(self, capsys):
        rc = main(["bench", "--benchmark", "ackley", "--point", "0,0", "--point", "1,1"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "ackley(0,0)" in out
        assert out.count("=") == 2

    def test_out_of_bounds_exit_2(self, capsys):
        rc = main(["bench", "--benchmark", "ackley", "--point", "100,0"])
        assert rc == 2
        assert "coordinate 0" in capsys.readouterr().err
