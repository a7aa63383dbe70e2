"""Experiment orchestration: configs, summaries, benefit ratios, artifacts."""

import csv
import json
import os

import numpy as np
import pytest

from besd.experiment import (ConfigError, DOMAIN_DEFAULTS, ExperimentConfig,
                             SUMMARY_FIELDS, emit_plots, ratio_report,
                             run_experiment)
from besd.loop import replay
from besd.shaping import SubgoalDesign


def tiny_config(**overrides):
    kw = dict(cost_budget=5000.0, tau_set=(150.0, 300.0), q_set=(2, 4),
              lhs_size=10, init_per_tau=3, eval_batch=4, final_eval_batch=6,
              checkpoints=2, seeds=(0,), methods=("BESD", "QL"))
    kw.update(overrides)
    return ExperimentConfig.default("GW10", **kw)


class TestConfig:
    def test_domain_defaults_fill_in(self):
        cfg = ExperimentConfig.default("KEY3")
        assert cfg.k == 3
        assert cfg.tau_set == (400, 700, 1000)
        assert cfg.q_set == (5, 20)
        assert cfg.window == 500
        cfg = ExperimentConfig.default("GW20")
        assert cfg.q_set == (20,) and cfg.tau_max == 10000

    def test_json_round_trip_is_byte_identical(self):
        cfg = tiny_config(seeds=(0, 1, 2), ratio_window=77)
        text = cfg.to_json()
        again = ExperimentConfig.from_json(text)
        assert again == cfg
        assert again.to_json() == text

    def test_ratio_window_zero_means_domain_default(self):
        assert tiny_config().window == DOMAIN_DEFAULTS["GW10"]["window"]
        assert tiny_config(ratio_window=33).window == 33

    def test_validation_rejects_bad_values(self):
        with pytest.raises(ConfigError, match="unknown domain"):
            ExperimentConfig.default("GW11")
        with pytest.raises(ConfigError, match="tauSet"):
            tiny_config(tau_set=())
        with pytest.raises(ConfigError, match="qSet"):
            tiny_config(q_set=(0,))
        with pytest.raises(ConfigError, match="unknown methods"):
            tiny_config(methods=("BESD", "SGD"))
        with pytest.raises(ConfigError, match="costBudget"):
            tiny_config(cost_budget=0.0)
        with pytest.raises(ConfigError, match="seeds"):
            tiny_config(seeds=())

    def test_from_json_reports_unknown_and_missing_keys(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            ExperimentConfig.from_json("{nope")
        doc = json.loads(tiny_config().to_json())
        doc["tauGrid"] = [1, 2]
        with pytest.raises(ConfigError, match="tauGrid"):
            ExperimentConfig.from_json(json.dumps(doc))
        del doc["tauGrid"], doc["costBudget"]
        with pytest.raises(ConfigError, match="costBudget"):
            ExperimentConfig.from_json(json.dumps(doc))


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    cfg = tiny_config()
    return cfg, run_experiment(cfg, str(out))


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("arts")
    cfg = tiny_config(seeds=(0, 1), methods=("BESD", "QL"))
    result = run_experiment(cfg, str(out / "runs"))
    return cfg, result, out


class TestRunExperiment:
    def test_summary_structure(self, tiny_run):
        cfg, result = tiny_run
        with open(result["summary"], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(SUMMARY_FIELDS)
        body = rows[1:]
        assert len(body) == len(cfg.seeds) * len(cfg.methods) * cfg.checkpoints
        grid = [cfg.cost_budget * (j + 1) / cfg.checkpoints
                for j in range(cfg.checkpoints)]
        for method in cfg.methods:
            costs = [float(r[3]) for r in body if r[1] == method]
            assert costs == grid
        for r in body:
            assert 0.0 <= float(r[4]) <= 1.0    # GW10 scores live in [0, 1]
            assert float(r[5]) >= 0.0

    def test_one_log_per_cell(self, tiny_run):
        cfg, result = tiny_run
        names = sorted(os.path.basename(p) for p in result["logs"])
        assert names == sorted(f"GW10_{m}_seed{s}.jsonl"
                               for s in cfg.seeds for m in cfg.methods)
        for p in result["logs"]:
            assert os.path.exists(p)

    def test_main_loop_log_replays_clean(self, tiny_run):
        _, result = tiny_run
        log = [p for p in result["logs"] if "_BESD_" in p][0]
        summary = replay(log)
        assert summary["meanGap"] <= 1e-8 and summary["covGap"] <= 1e-8

    def test_rerun_is_deterministic(self, tiny_run, tmp_path):
        cfg, result = tiny_run
        again = run_experiment(cfg, str(tmp_path))
        with open(result["summary"]) as fh:
            first = fh.read()
        with open(again["summary"]) as fh:
            assert fh.read() == first

    def test_seed_override_restricts_the_run(self, tmp_path):
        cfg = tiny_config(seeds=(0, 1), methods=("QL",))
        result = run_experiment(cfg, str(tmp_path), seed_override=5)
        assert [os.path.basename(p) for p in result["logs"]] == \
            ["GW10_QL_seed5.jsonl"]
        with open(result["summary"], newline="") as fh:
            body = list(csv.reader(fh))[1:]
        assert {r[2] for r in body} == {"5"}

    def test_all_methods_execute(self, tmp_path):
        cfg = tiny_config(methods=("TQL", "HB", "EI", "LCB"),
                          cost_budget=3000.0, checkpoints=1,
                          eval_batch=2, final_eval_batch=2)
        result = run_experiment(cfg, str(tmp_path))
        with open(result["summary"], newline="") as fh:
            body = list(csv.reader(fh))[1:]
        assert {r[1] for r in body} == {"TQL", "HB", "EI", "LCB"}


class TestRatioReport:
    def test_null_design_is_neutral(self):
        r = ratio_report("GW10", None, trials=6, tau=150, window=80,
                         rng=np.random.default_rng(0))
        assert r == 1.0    # neither agent escapes the start region

    def test_door_and_goal_subgoals_cut_steps_to_goal(self):
        design = SubgoalDesign.from_vector(np.array([5.5, 8.5, 9.5, 0.5]), 2)
        r = ratio_report("GW10", design, trials=30, tau=1000, window=100,
                         rng=np.random.default_rng(0))
        assert r < 0.6

    def test_treasure_domain_compares_window_reward(self):
        # reward ratio, not a steps ratio: both agents idle -> exactly neutral
        r = ratio_report("TR", None, trials=4, tau=300, window=150,
                         rng=np.random.default_rng(0))
        assert r == 1.0

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError, match="trials"):
            ratio_report("GW10", None, trials=0)
        with pytest.raises(ConfigError, match="unknown domain"):
            ratio_report("GW99", None, trials=1)


class TestArtifacts:
    def test_curve_svg_written_per_method(self, artifacts):
        _, result, out = artifacts
        written = emit_plots([result["summary"]], str(out / "plots"))
        assert len(written) == 1 and written[0].endswith("GW10_curves.svg")
        with open(written[0]) as fh:
            svg = fh.read()
        assert "<polyline" in svg and "BESD" in svg and "QL" in svg

    def test_seed_spread_renders_a_band(self, tmp_path):
        # hand-built summary: two seeds with different means -> spread ribbon
        summary = tmp_path / "summary.csv"
        lines = ["domain,method,seed,cost,meanScore,twoSE"]
        for seed, shift in ((0, 0.0), (1, 0.1)):
            for cost, mean in ((1000.0, 0.2), (2000.0, 0.5)):
                lines.append(f"GW10,BESD,{seed},{cost},{mean + shift},0.01")
        summary.write_text("\n".join(lines) + "\n")
        written = emit_plots([str(summary)], str(tmp_path / "plots"))
        with open(written[0]) as fh:
            assert "<polygon" in fh.read()

    def test_single_seed_summary_has_no_band(self, tmp_path):
        cfg = tiny_config(methods=("QL",), checkpoints=2)
        result = run_experiment(cfg, str(tmp_path / "runs"))
        written = emit_plots([result["summary"]], str(tmp_path / "plots"))
        with open(written[0]) as fh:
            assert "<polygon" not in fh.read()

    def test_recommendation_path_rows_follow_iterations(self, artifacts):
        cfg, result, out = artifacts
        log = [p for p in result["logs"] if "_BESD_seed0" in p][0]
        n_iters = 0
        with open(log) as fh:
            for line in fh:
                rec = json.loads(line)
                if rec.get("kind") == "iter" and "thetaRec" in rec:
                    n_iters += 1
        written = emit_plots([log], str(out / "paths"))
        with open(written[0], newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "cost", "subgoal", "coord1", "coord2"]
        assert len(rows) - 1 == n_iters * cfg.k
        assert {r[2] for r in rows[1:]} == {"1", "2"}

    def test_corrupt_log_line_is_named(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"kind": "meta", "thetaBar": [[1, 2]], "pointDim": 2}\n'
                       "{oops\n")
        with pytest.raises(ValueError, match=r"bad\.jsonl:2"):
            emit_plots([str(bad)], str(tmp_path / "out"))

    def test_empty_input_returns_none(self, tmp_path):
        assert emit_plots([], str(tmp_path)) is None

    def test_unknown_extension_rejected(self, tmp_path):
        stray = tmp_path / "notes.txt"
        stray.write_text("hello\n")
        with pytest.raises(ValueError, match="notes.txt"):
            emit_plots([str(stray)], str(tmp_path / "out"))
