import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spike_mh.cli import main
from spike_mh.dql import DqlConfig
from spike_mh.harness import (
    DQL,
    DQL_HEADER,
    MH_HEADER,
    MH_SNN,
    ConfigError,
    ExperimentConfig,
    RunSummary,
    emit_table,
    load_config,
    moving_average,
    read_run_csv,
    report,
    round_to_decade,
    run_experiment,
    svg_plot,
    write_csv,
)
from spike_mh.mh import MhConfig, evaluate_reward
from spike_mh.snn import ParamTensor

finite = st.floats(-1e6, 1e6, allow_nan=False)


def summary(env, algo, bests, hidden=None):
    return RunSummary(env, algo, list(range(len(bests))), bests, [1] * len(bests), [1] * len(bests),
                      [10] * len(bests), bests, float(np.median(bests)), max(bests), 0.0, hidden)


class TestMovingAverage:
    def test_examples(self):
        assert moving_average([3.0, -1.0, 7.5], 1) == [3.0, -1.0, 7.5]
        assert moving_average([0.1] * 7, 3) == [0.1] * 7
        assert moving_average([0, 10], 2) == [0.0, 5.0]
        assert moving_average([], 50) == []
        assert moving_average([1, 2, 3, 4], 2) == [1.0, 1.5, 2.5, 3.5]

    def test_window_validated(self):
        with pytest.raises(ValueError):
            moving_average([1.0], 0)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(finite, max_size=80), st.integers(1, 60))
    def test_length_and_trailing_mean(self, xs, window):
        out = moving_average(xs, window)
        assert len(out) == len(xs)
        for i, y in enumerate(out):
            chunk = xs[max(0, i - window + 1):i + 1]
            assert y == pytest.approx(sum(chunk) / len(chunk), rel=1e-9, abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(finite, max_size=80), st.integers(1, 60))
    def test_non_decreasing_preserved(self, xs, window):
        out = moving_average(sorted(xs), window)
        assert out == sorted(out)

    @settings(max_examples=100, deadline=None)
    @given(finite, st.integers(1, 100), st.integers(1, 60))
    def test_constant_preserved(self, c, n, window):
        assert moving_average([c] * n, window) == [c] * n


class TestTable:
    def test_rounding(self):
        assert round_to_decade(500) == 500
        assert round_to_decade(-87) == -90
        assert round_to_decade(284) == 280
        assert round_to_decade(285) == 290
        assert round_to_decade(-85) == -90
        assert round_to_decade(-101.5) == -100

    def test_emit_table(self):
        text, csv_text = emit_table([
            summary("cartpole", MH_SNN, [500.0, 499.0]),
            summary("cartpole", DQL, [284.0], hidden=1),
            summary("acrobot", MH_SNN, [-87.0, -120.0]),
        ])
        lines = text.splitlines()
        assert lines[0].split() == ["env", "dql-1h", "mh-snn"]
        assert lines[1].split() == ["acrobot", "-", "-90"]
        assert lines[2].split() == ["cartpole", "280", "500"]
        assert "cartpole,dql-1h,284.0,280" in csv_text.splitlines()
        assert "acrobot,mh-snn,-87.0,-90" in csv_text.splitlines()

    def test_emit_table_needs_input(self):
        with pytest.raises(ValueError):
            emit_table([])


class TestCsv:
    def test_roundtrip(self, tmp_path):
        rows = [(1, 9.0, True, 0.123456789012345, 9.0), (2, 31.0, False, 1e-300, 31.0)]
        write_csv(tmp_path / "a.csv", MH_HEADER, rows)
        assert (tmp_path / "a.csv").read_text().splitlines()[0] == ",".join(MH_HEADER)
        algo, cols = read_run_csv(tmp_path / "a.csv")
        assert algo == MH_SNN
        assert list(zip(*cols.values())) == rows
        write_csv(tmp_path / "b.csv", DQL_HEADER, [(1, -500.0, 1.0), (2, -431.0, 0.995)])
        algo, cols = read_run_csv(tmp_path / "b.csv")
        assert algo == DQL and cols["epsilon"] == [1.0, 0.995]

    def test_unknown_header(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_run_csv(tmp_path / "x.csv")

    def test_svg(self):
        svg = svg_plot([1.0, 5.0, 3.0], 2, "demo")
        assert svg.startswith("<svg") and svg.count("<polyline") == 2 and "demo" in svg
        assert "<svg" in svg_plot([], 50, "empty")


class TestConfig:
    def test_toml(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(
            '[experiment]\nenv = "acrobot"\nalgo = "mh-snn"\nseeds = [3, 4]\nwindow = 20\n'
            f'out = "{tmp_path / "out"}"\n'
            "[experiment.mh]\nn_iter = 7\nproposal_sigma = 0.05\n"
            "[experiment.snn]\nweight_std = 1.0\n"
        )
        config = load_config(path)
        assert (config.env_kind, config.algo, config.seeds, config.window) == ("acrobot", MH_SNN, [3, 4], 20)
        assert config.mh.n_iter == 7 and config.mh.proposal_sigma == 0.05
        assert config.snn.weight_std == 1.0
        assert load_config(path, seeds=[9], env_kind="cartpole").seeds == [9]

    @pytest.mark.parametrize("body", [
        '[experiment]\nenv = "cartpole"\ncolour = "red"\n',
        '[experiment]\nenv = "cartpole"\n[experiment.mh]\nn_iter = 0\n',
        '[experiment]\nenv = "pong"\n',
        '[experiment]\nenv = "cartpole"\nseeds = []\n',
        '[experiment]\nenv = "cartpole"\nwindow = 0\n',
        '[other]\n',
        'not toml [',
    ])
    def test_invalid(self, tmp_path, body):
        path = tmp_path / "bad.toml"
        path.write_text(body)
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.toml")


class TestRunExperiment:
    def config(self, out, **kw):
        return ExperimentConfig("cartpole", MH_SNN, [1, 2, 3, 4, 5], mh=MhConfig(n_iter=500), out_dir=out, **kw)

    def test_artifacts_determinism_and_summary(self, tmp_path):
        s1 = run_experiment(self.config(tmp_path / "a"))
        s2 = run_experiment(self.config(tmp_path / "b"))
        for seed in range(1, 6):
            stem = f"mh-snn_cartpole_seed{seed}"
            a = (tmp_path / "a" / f"{stem}.csv").read_bytes()
            assert a == (tmp_path / "b" / f"{stem}.csv").read_bytes()
            assert len(a.splitlines()) == 501
            assert (tmp_path / "a" / f"{stem}.svg").exists()
            assert (tmp_path / "a" / f"{stem}_best_params.json").exists()
        assert len(list((tmp_path / "a").glob("*.csv"))) == 5
        assert len(list((tmp_path / "a").glob("*.svg"))) == 5
        data = json.loads((tmp_path / "a" / "summary.json").read_text())
        assert data["best_rewards"] == s1.best_rewards == s2.best_rewards
        assert all(s1.max_best >= b for b in s1.best_rewards)
        assert s1.max_best >= s1.median_best
        assert all(1 <= i <= n for i, n in zip(s1.best_indices, s1.lengths))
        assert s1.best_episodes == [2 * i for i in s1.best_indices]

    def test_checkpoints_reproduce_their_reward(self, tmp_path):
        run_experiment(ExperimentConfig("acrobot", MH_SNN, [2, 3], mh=MhConfig(n_iter=40), out_dir=tmp_path))
        for seed in (2, 3):
            path = tmp_path / f"mh-snn_acrobot_seed{seed}_best_params.json"
            record = json.loads(path.read_text())
            params = ParamTensor.load_json(path)
            assert evaluate_reward(params, "acrobot", record["eval_seed"]) == record["eval_reward"]

    def test_dql_run_and_report(self, tmp_path):
        run_experiment(ExperimentConfig("cartpole", DQL, [1, 2], dql=DqlConfig(max_episodes=6, batch_size=16),
                                        hidden_layers=2, out_dir=tmp_path / "dql"))
        run_experiment(ExperimentConfig("cartpole", MH_SNN, [1], mh=MhConfig(n_iter=20), out_dir=tmp_path / "mh"))
        summaries, text = report(tmp_path, window=5)
        assert {(s.algo, s.hidden_layers) for s in summaries} == {(DQL, 2), (MH_SNN, None)}
        assert text.splitlines()[0].split() == ["env", "dql-2h", "mh-snn"]
        assert (tmp_path / "table.csv").exists()
        _, cols = read_run_csv(tmp_path / "dql" / "dql_cartpole_seed1.csv")
        assert cols["episode"] == [1, 2, 3, 4, 5, 6]

    def test_report_without_logs(self, tmp_path):
        with pytest.raises(ConfigError):
            report(tmp_path)


class TestCli:
    def test_train_eval_report(self, tmp_path, capsys):
        out = tmp_path / "run"
        cfg = tmp_path / "c.toml"
        cfg.write_text("[experiment]\n[experiment.mh]\nn_iter = 30\n")
        assert main(["train", "--env", "cartpole", "--algo", "mh-snn", "--config", str(cfg),
                     "--seeds", "1,2", "--out", str(out)]) == 0
        assert "seed 2: best" in capsys.readouterr().out
        params = out / "mh-snn_cartpole_seed1_best_params.json"
        record = json.loads(params.read_text())
        assert main(["eval", "--params", str(params), "--env", "cartpole"]) == 0
        assert f"mean reward {record['eval_reward']:g}" in capsys.readouterr().out
        assert main(["report", "--in", str(out)]) == 0
        assert "mh-snn" in capsys.readouterr().out

    def test_errors_exit_nonzero(self, tmp_path, capsys):
        assert main(["eval", "--params", str(tmp_path / "missing.json"), "--env", "cartpole"]) == 2
        ParamTensor.zeros(4, 2).save_json(tmp_path / "p.json")
        assert main(["eval", "--params", str(tmp_path / "p.json"), "--env", "acrobot"]) == 2
        assert main(["train", "--config", str(tmp_path / "missing.toml")]) == 2
        assert main(["train", "--algo", "mh-snn"]) == 2
        assert "error:" in capsys.readouterr().err
        with pytest.raises(SystemExit) as exc:
            main(["train", "--env", "mountaincar"])
        assert exc.value.code == 2

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "spike_mh", "--help"], capture_output=True, text=True)
        assert out.returncode == 0 and "train" in out.stdout
