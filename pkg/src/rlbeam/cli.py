"""Batch entry point: run a scenario and emit reproducible CSV artifacts.

Usage:
    rlbeam --scenario case1 --runs 100 --seed 7 --out results/

The scenario is either a built-in name (case1, case2) or a path to a JSON
configuration; see parse_config for the schema. Outputs land in the
chosen directory:

    beampattern.csv     run-averaged normalized pattern, one row per step
    convergence.csv     mean Q-table change per step
    pd_summary.csv      per-target detection probability, adaptive vs omni
    trace.csv           state/action/reward trace of run 0
    config_resolved.json  the fully resolved configuration actually run
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .array_signal import AngleGrid, ArrayConfig
from .detector import NoiseModel, ThresholdConfig
from .rl_agent import AgentConfig
from .sim_engine import (
    MCSummary,
    Scenario,
    TargetSpec,
    monte_carlo,
    study_case_1,
    study_case_2,
)

__all__ = ["main", "parse_config", "scenario_to_dict", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_OUTPUT = 4

BUILTIN_SCENARIOS = ("case1", "case2")


class ConfigError(Exception):
    """Invalid or unreadable run configuration."""


def scenario_to_dict(scn: Scenario) -> dict:
    """JSON-serializable image of a scenario; inverse of the parser."""
    return {
        "array": {"n_tx": scn.array.n_tx, "n_rx": scn.array.n_rx},
        "grid": {
            "theta_min_rad": scn.grid.theta_min,
            "theta_max_rad": scn.grid.theta_max,
            "n_bins": scn.grid.n_bins,
        },
        "n_ranges": scn.n_ranges,
        "n_steps": scn.n_steps,
        "targets": [asdict(t) for t in scn.targets],
        "noise": {"sigma2": scn.noise.sigma2, "known": scn.noise.known},
        "p_fa": scn.threshold.p_fa,
        "agent": {
            "beta": scn.agent.beta,
            "gamma": scn.agent.gamma,
            "epsilon": scn.agent.epsilon,
            "t_max": scn.agent.t_max,
            "reward_kind": scn.agent.reward_kind,
            "textbook_update": scn.agent.textbook_update,
            "learning_rate": scn.agent.learning_rate,
        },
        "p_t": scn.p_t,
        "baseline_mode": scn.baseline_mode,
        "n_runs": scn.n_runs,
        "seed": scn.seed,
    }


def _take(block: dict, defaults: dict, context: str) -> dict:
    unknown = set(block) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) in {context}: {', '.join(sorted(unknown))}")
    merged = dict(defaults)
    merged.update(block)
    return merged


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from a configuration mapping.

    Missing keys fall back to the static four-target defaults; unknown
    keys are rejected outright so typos cannot silently drift parameters.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    defaults = scenario_to_dict(study_case_1())
    top = _take(data, defaults, "configuration")
    array_d = _take(_expect_dict(top["array"], "array"), defaults["array"], "array")
    grid_d = _take(_expect_dict(top["grid"], "grid"), defaults["grid"], "grid")
    noise_d = _take(_expect_dict(top["noise"], "noise"), defaults["noise"], "noise")
    agent_d = _take(_expect_dict(top["agent"], "agent"), defaults["agent"], "agent")

    target_default = {
        "angle_bin": 0,
        "range_cell": 0,
        "snr_db": 0.0,
        "active_from": 1,
        "active_to": top["n_steps"],
    }
    if not isinstance(top["targets"], list):
        raise ConfigError("targets must be a list of objects")
    targets = []
    for i, entry in enumerate(top["targets"]):
        t = _take(_expect_dict(entry, f"targets[{i}]"), target_default, f"targets[{i}]")
        targets.append(
            TargetSpec(
                angle_bin=_as_int(t["angle_bin"], f"targets[{i}].angle_bin"),
                range_cell=_as_int(t["range_cell"], f"targets[{i}].range_cell"),
                snr_db=_as_float(t["snr_db"], f"targets[{i}].snr_db"),
                active_from=_as_int(t["active_from"], f"targets[{i}].active_from"),
                active_to=_as_int(t["active_to"], f"targets[{i}].active_to"),
            )
        )

    try:
        return Scenario(
            array=ArrayConfig(
                n_tx=_as_int(array_d["n_tx"], "array.n_tx"),
                n_rx=_as_int(array_d["n_rx"], "array.n_rx"),
            ),
            grid=AngleGrid(
                theta_min=_as_float(grid_d["theta_min_rad"], "grid.theta_min_rad"),
                theta_max=_as_float(grid_d["theta_max_rad"], "grid.theta_max_rad"),
                n_bins=_as_int(grid_d["n_bins"], "grid.n_bins"),
            ),
            n_ranges=_as_int(top["n_ranges"], "n_ranges"),
            targets=targets,
            n_steps=_as_int(top["n_steps"], "n_steps"),
            noise=NoiseModel(
                sigma2=_as_float(noise_d["sigma2"], "noise.sigma2"),
                known=_as_bool(noise_d["known"], "noise.known"),
            ),
            threshold=ThresholdConfig.from_pfa(_as_float(top["p_fa"], "p_fa")),
            agent=AgentConfig(
                beta=_as_float(agent_d["beta"], "agent.beta"),
                gamma=_as_float(agent_d["gamma"], "agent.gamma"),
                epsilon=_as_float(agent_d["epsilon"], "agent.epsilon"),
                t_max=_as_int(agent_d["t_max"], "agent.t_max"),
                reward_kind=str(agent_d["reward_kind"]),
                textbook_update=_as_bool(agent_d["textbook_update"], "agent.textbook_update"),
                learning_rate=_as_float(agent_d["learning_rate"], "agent.learning_rate"),
            ),
            p_t=_as_float(top["p_t"], "p_t"),
            baseline_mode=str(top["baseline_mode"]),
            n_runs=_as_int(top["n_runs"], "n_runs"),
            seed=_as_int(top["seed"], "seed"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _expect_dict(value, context: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{context} must be a JSON object")
    return value


def _as_int(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context} must be an integer, got {value!r}")
    return value


def _as_float(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context} must be a number, got {value!r}")
    return float(value)


def _as_bool(value, context: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{context} must be a boolean, got {value!r}")
    return value


def parse_config(path: str | Path) -> Scenario:
    """Load a scenario from a JSON file. Unknown keys are rejected."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def _resolve_scenario(args) -> Scenario:
    try:
        if args.scenario in BUILTIN_SCENARIOS:
            if args.scenario == "case1":
                scn = study_case_1(n_steps=300 if args.k is None else args.k)
            else:
                scn = study_case_2()
                if args.k is not None:
                    scn = replace(scn, n_steps=args.k)
        else:
            scn = parse_config(args.scenario)
            if args.k is not None:
                scn = replace(scn, n_steps=args.k)
        if args.runs is not None:
            scn = replace(scn, n_runs=args.runs)
        if args.seed is not None:
            scn = replace(scn, seed=args.seed)
        if args.reward is not None:
            scn = replace(scn, agent=replace(scn.agent, reward_kind=args.reward))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return scn


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_outputs(
    out_dir: Path,
    scn: Scenario,
    results: dict[str, MCSummary],
) -> None:
    primary_mode = "rl" if "rl" in results else "omni"
    primary = results[primary_mode]

    deg = np.degrees(scn.grid.angles)
    header = ["k"] + [f"D_{d:g}deg" for d in deg]
    rows = [
        [k + 1] + [_fmt(v) for v in primary.mean_beampattern_db[k]]
        for k in range(scn.n_steps)
    ]
    _write_csv(out_dir / "beampattern.csv", header, rows)

    _write_csv(
        out_dir / "convergence.csv",
        ["k", "xi_mean"],
        [[k + 1, _fmt(primary.mean_xi[k])] for k in range(scn.n_steps)],
    )

    header = [
        "target",
        "angle_bin",
        "snr_db",
        "pd_rl",
        "pd_rl_postburn",
        "pd_omni",
        "pd_omni_postburn",
    ]
    rows = []
    for i, t in enumerate(scn.targets):
        row = [i + 1, t.angle_bin, _fmt(t.snr_db)]
        for mode in ("rl", "omni"):
            if mode in results:
                row += [_fmt(results[mode].pd[i]), _fmt(results[mode].pd_postburn[i])]
            else:
                row += ["", ""]
        rows.append(row)
    _write_csv(out_dir / "pd_summary.csv", header, rows)

    run0 = primary.runs[0]
    _write_csv(
        out_dir / "trace.csv",
        ["k", "state", "action", "reward"],
        [
            [k + 1, int(run0.states[k]), int(run0.actions[k]), _fmt(run0.rewards[k])]
            for k in range(scn.n_steps)
        ],
    )

    resolved = scenario_to_dict(replace(scn, baseline_mode=primary_mode))
    with open(out_dir / "config_resolved.json", "w") as fh:
        json.dump(resolved, fh, indent=2)
        fh.write("\n")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rlbeam",
        description="Closed-loop adaptive MIMO beamforming simulator",
    )
    parser.add_argument(
        "--scenario",
        required=True,
        help="built-in name (case1, case2) or path to a JSON config",
    )
    parser.add_argument("--runs", type=int, default=None, help="Monte Carlo run count override")
    parser.add_argument("--seed", type=int, default=None, help="base seed override")
    parser.add_argument(
        "--baseline",
        choices=("rl", "omni", "both"),
        default="both",
        help="which transmit policy to execute (default: both, for the comparison table)",
    )
    parser.add_argument(
        "--reward",
        choices=("pd_tail", "pdf_literal"),
        default=None,
        help="reward definition override",
    )
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--k", type=int, default=None, help="number of time steps override")
    args = parser.parse_args(argv)

    try:
        scn = _resolve_scenario(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    modes = ("rl", "omni") if args.baseline == "both" else (args.baseline,)
    results: dict[str, MCSummary] = {}
    for mode in modes:
        run_scn = replace(scn, baseline_mode=mode)
        results[mode] = monte_carlo(run_scn, keep_runs=1)

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_outputs(out_dir, scn, results)
    except OSError as exc:
        print(f"error: cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    print(f"scenario: {args.scenario}  runs={scn.n_runs}  steps={scn.n_steps}  seed={scn.seed}")
    for i, t in enumerate(scn.targets):
        parts = [f"target {i + 1} (bin {t.angle_bin}, {t.snr_db:+.0f} dB):"]
        for mode in modes:
            parts.append(f"pd_{mode}={results[mode].pd[i]:.3f}")
        print("  " + "  ".join(parts))
    print(f"outputs written to {out_dir}/")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
