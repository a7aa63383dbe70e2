"""Command-line interface: subcommand wiring and exit codes."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from besd.cli import main
from besd.experiment import ExperimentConfig
from besd.shaping import SubgoalDesign


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """One tiny `run` invocation shared by the read-only subcommand tests."""
    tmp = tmp_path_factory.mktemp("cli")
    cfg = ExperimentConfig.default(
        "GW10", cost_budget=4000.0, tau_set=(150.0, 300.0), q_set=(2, 4),
        lhs_size=8, init_per_tau=2, eval_batch=3, final_eval_batch=4,
        checkpoints=2, seeds=(0,), methods=("BESD", "QL"))
    cfg_path = tmp / "config.json"
    cfg_path.write_text(cfg.to_json())
    out = tmp / "runs"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 0
    return tmp, cfg_path, out


class TestRun:
    def test_writes_summary_and_logs(self, run_dir):
        _, _, out = run_dir
        names = sorted(os.listdir(out))
        assert names == ["GW10_BESD_seed0.jsonl", "GW10_QL_seed0.jsonl",
                         "summary.csv"]

    def test_seed_flag_overrides_config(self, run_dir, tmp_path):
        _, cfg_path, _ = run_dir
        assert main(["run", str(cfg_path), "--out", str(tmp_path),
                     "--seed", "7"]) == 0
        assert sorted(os.listdir(tmp_path)) == \
            ["GW10_BESD_seed7.jsonl", "GW10_QL_seed7.jsonl", "summary.csv"]

    def test_invalid_config_fails_with_message(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"domainId": "GW10"}')
        assert main(["run", str(bad)]) == 1
        assert "missing required config keys" in capsys.readouterr().err

    def test_missing_config_file_fails(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json")]) == 1


class TestRatios:
    def test_design_file(self, tmp_path, capsys):
        design = SubgoalDesign.from_vector(np.array([5.5, 8.5, 9.5, 0.5]), 2)
        dpath = tmp_path / "design.json"
        dpath.write_text(design.to_json())
        rc = main(["ratios", "--domain", "GW10", "--design", str(dpath),
                   "--trials", "4", "--tau", "300", "--window", "60",
                   "--seed", "1"])
        assert rc == 0
        assert "GW10 ratio over 4 trials" in capsys.readouterr().out

    def test_null_design(self, capsys):
        rc = main(["ratios", "--domain", "GW10", "--trials", "3",
                   "--tau", "150", "--window", "50"])
        assert rc == 0
        assert "1.0000" in capsys.readouterr().out

    def test_unknown_domain_fails(self, capsys):
        assert main(["ratios", "--domain", "XX", "--trials", "1"]) == 1
        assert "unknown domain" in capsys.readouterr().err


class TestPlot:
    def test_renders_summary_and_log(self, run_dir, tmp_path, capsys):
        _, _, out = run_dir
        rc = main(["plot", str(out / "summary.csv"),
                   str(out / "GW10_BESD_seed0.jsonl"), "--out", str(tmp_path)])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2 and all(l.startswith("wrote: ") for l in lines)
        assert sorted(os.listdir(tmp_path)) == \
            ["GW10_BESD_seed0_path.csv", "GW10_curves.svg"]

    def test_no_inputs_is_code_3(self, tmp_path, capsys):
        assert main(["plot", "--out", str(tmp_path)]) == 3
        assert "nothing to do" in capsys.readouterr().err


class TestReplay:
    def test_clean_log_prints_summary(self, run_dir, capsys):
        _, _, out = run_dir
        rc = main(["replay", str(out / "GW10_BESD_seed0.jsonl")])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["meanGap"] <= 1e-8 and summary["iterations"] >= 1

    def test_tampered_log_fails(self, run_dir, tmp_path, capsys):
        _, _, out = run_dir
        lines = (out / "GW10_BESD_seed0.jsonl").read_text().splitlines()
        for i, line in enumerate(lines):
            rec = json.loads(line)
            if rec.get("kind") == "iter":
                rec["score"] = rec["score"] + 0.25
                lines[i] = json.dumps(rec)
                break
        bad = tmp_path / "tampered.jsonl"
        bad.write_text("\n".join(lines) + "\n")
        assert main(["replay", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_file_fails(self, tmp_path):
        assert main(["replay", str(tmp_path / "gone.jsonl")]) == 1


def test_console_script_smoke(run_dir):
    _, _, out = run_dir
    proc = subprocess.run(
        [sys.executable, "-m", "besd.cli", "replay",
         str(out / "GW10_BESD_seed0.jsonl")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["iterations"] >= 1
