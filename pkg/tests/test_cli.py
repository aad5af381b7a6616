import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from rlbeam.cli import ConfigError, main, parse_config, scenario_from_dict, scenario_to_dict
from rlbeam.sim_engine import study_case_1


def tiny_config(**overrides):
    """Small, fast scenario as a config mapping."""
    cfg = {
        "array": {"n_tx": 4, "n_rx": 4},
        "grid": {"theta_min_rad": -0.7853981633974483, "theta_max_rad": 0.7853981633974483, "n_bins": 8},
        "n_ranges": 12,
        "n_steps": 6,
        "targets": [
            {"angle_bin": 2, "range_cell": 5, "snr_db": 3.0, "active_from": 1, "active_to": 6},
        ],
        "noise": {"sigma2": 1.0, "known": True},
        "p_fa": 1e-4,
        "agent": {"beta": 0.8, "gamma": 0.1, "epsilon": 0.5, "t_max": 4,
                  "reward_kind": "pd_tail", "textbook_update": False, "learning_rate": 0.1},
        "p_t": 4.0,
        "baseline_mode": "rl",
        "n_runs": 2,
        "seed": 1,
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParseConfig:
    def test_case1_round_trip(self, tmp_path):
        expected = study_case_1()
        path = write_config(tmp_path, scenario_to_dict(expected))
        assert parse_config(path) == expected

    def test_zero_pfa_rejected_by_name(self, tmp_path):
        path = write_config(tmp_path, tiny_config(p_fa=0.0))
        with pytest.raises(ConfigError, match="p_fa"):
            parse_config(path)

    def test_missing_seed_defaults_to_zero(self, tmp_path):
        cfg = tiny_config()
        del cfg["seed"]
        path = write_config(tmp_path, cfg)
        assert parse_config(path).seed == 0

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path, tiny_config(p_total=4.0))
        with pytest.raises(ConfigError, match="p_total"):
            parse_config(path)

    def test_unknown_nested_key_rejected(self, tmp_path):
        cfg = tiny_config()
        cfg["agent"]["alpha"] = 0.1
        path = write_config(tmp_path, cfg)
        with pytest.raises(ConfigError, match="alpha"):
            parse_config(path)

    def test_type_errors_name_field(self, tmp_path):
        path = write_config(tmp_path, tiny_config(n_runs=2.5))
        with pytest.raises(ConfigError, match="n_runs"):
            parse_config(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"array": }')
        with pytest.raises(ConfigError, match="bad.json:1"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "nope.json")

    def test_dict_round_trip_identity(self):
        scn = study_case_1()
        assert scenario_from_dict(scenario_to_dict(scn)) == scn


class TestMain:
    def run_main(self, tmp_path, extra=()):
        cfg_path = write_config(tmp_path, tiny_config())
        out = tmp_path / "out"
        rc = main(["--scenario", str(cfg_path), "--out", str(out), *extra])
        return rc, out

    def test_writes_all_outputs(self, tmp_path):
        rc, out = self.run_main(tmp_path)
        assert rc == 0
        for name in ("beampattern.csv", "convergence.csv", "pd_summary.csv",
                     "trace.csv", "config_resolved.json"):
            assert (out / name).exists(), name

    def test_csv_shapes_and_headers(self, tmp_path):
        rc, out = self.run_main(tmp_path)
        beam = read_csv(out / "beampattern.csv")
        assert beam[0][0] == "k"
        assert len(beam) == 1 + 6  # header + n_steps
        assert len(beam[1]) == 1 + 8  # k column + bins
        conv = read_csv(out / "convergence.csv")
        assert conv[0] == ["k", "xi_mean"]
        assert len(conv) == 1 + 6
        trace = read_csv(out / "trace.csv")
        assert trace[0] == ["k", "state", "action", "reward"]
        assert len(trace) == 1 + 6

    def test_pd_summary_contains_both_modes(self, tmp_path):
        rc, out = self.run_main(tmp_path)
        rows = read_csv(out / "pd_summary.csv")
        header = rows[0]
        assert "pd_rl" in header and "pd_omni" in header
        row = dict(zip(header, rows[1]))
        assert 0.0 <= float(row["pd_rl"]) <= 1.0
        assert 0.0 <= float(row["pd_omni"]) <= 1.0

    def test_baseline_omni_only(self, tmp_path):
        rc, out = self.run_main(tmp_path, extra=("--baseline", "omni"))
        assert rc == 0
        rows = read_csv(out / "pd_summary.csv")
        row = dict(zip(rows[0], rows[1]))
        assert row["pd_rl"] == ""
        assert 0.0 <= float(row["pd_omni"]) <= 1.0

    def test_overrides_echoed_in_resolved_config(self, tmp_path):
        cfg_path = write_config(tmp_path, tiny_config())
        out = tmp_path / "out"
        rc = main(["--scenario", str(cfg_path), "--out", str(out),
                   "--runs", "3", "--seed", "77", "--k", "4", "--reward", "pdf_literal"])
        assert rc == 0
        resolved = json.loads((out / "config_resolved.json").read_text())
        assert resolved["n_runs"] == 3
        assert resolved["seed"] == 77
        assert resolved["n_steps"] == 4
        assert resolved["agent"]["reward_kind"] == "pdf_literal"

    def test_resolved_config_reparses_identically(self, tmp_path):
        cfg_path = write_config(tmp_path, tiny_config())
        out = tmp_path / "out"
        assert main(["--scenario", str(cfg_path), "--out", str(out), "--baseline", "rl"]) == 0
        reparsed = parse_config(out / "config_resolved.json")
        out2 = tmp_path / "out2"
        assert main(["--scenario", str(out / "config_resolved.json"),
                     "--out", str(out2), "--baseline", "rl"]) == 0
        reparsed2 = parse_config(out2 / "config_resolved.json")
        assert reparsed == reparsed2

    def test_deterministic_outputs(self, tmp_path):
        cfg_path = write_config(tmp_path, tiny_config())
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["--scenario", str(cfg_path), "--out", str(out), "--seed", "5"]) == 0
            outs.append(out)
        for f in ("beampattern.csv", "convergence.csv", "pd_summary.csv", "trace.csv",
                  "config_resolved.json"):
            assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes(), f

    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, tiny_config(p_fa=0.0))
        rc = main(["--scenario", str(path), "--out", str(tmp_path / "o")])
        assert rc == 3
        assert "p_fa" in capsys.readouterr().err

    def test_unknown_scenario_name_exit_code(self, tmp_path):
        rc = main(["--scenario", str(tmp_path / "ghost.json"), "--out", str(tmp_path / "o")])
        assert rc == 3

    def test_unwritable_output_exit_code(self, tmp_path, capsys):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        cfg_path = write_config(tmp_path, tiny_config())
        rc = main(["--scenario", str(cfg_path), "--out", str(blocker)])
        assert rc == 4
        assert "cannot write" in capsys.readouterr().err

    def test_unknown_flag_exit_code(self):
        with pytest.raises(SystemExit) as err:
            main(["--scenario", "case1", "--frobnicate"])
        assert err.value.code == 2

    def test_case2_beampattern_row_count(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["--scenario", "case2", "--runs", "1", "--baseline", "omni",
                   "--out", str(out)])
        assert rc == 0
        beam = read_csv(out / "beampattern.csv")
        assert len(beam) == 1 + 600

    def test_console_entry_point(self, tmp_path):
        cfg_path = write_config(tmp_path, tiny_config())
        out = tmp_path / "out"
        proc = subprocess.run(
            [sys.executable, "-m", "rlbeam.cli", "--scenario", str(cfg_path),
             "--out", str(out), "--baseline", "omni"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "pd_summary.csv").exists()
        assert "outputs written" in proc.stdout
