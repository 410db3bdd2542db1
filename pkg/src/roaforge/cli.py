"""Configuration, orchestration, persistence, and reporting for all runs.

Usage:  roaforge <subcommand> --config <path> [--seed N] [--out DIR]

Subcommands: synth, compare, mass-sweep, grid-sweep, simulate, roa.
Exit codes: 0 success, 2 invalid configuration, 3 no stable seed controller,
4 internal numeric failure.

Configs are strict JSON: unknown keys are rejected, every applied default is
echoed to the run log, and the full resolved config is embedded in
result.json so reruns are reproducible.  All randomness flows from the single
config seed.  result.json is byte-identical across reruns except for its one
timestamp field.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bench, pipeline
from .certificate import QuadraticCandidate, certify_roa, linear_step_map
from .dynamics import Controller, simulate
from .errors import (
    ConfigError,
    DareDivergenceError,
    NoStableSeedError,
    NumericError,
    UnstableClosedLoopError,
)
from .lqr import lqr_cost_metric
from .lyapunov_nn import TrainConfig

SUBCOMMANDS = ("synth", "compare", "mass-sweep", "grid-sweep", "simulate", "roa")

CSV_HEADERS = {
    "compare": ["particles", "controller", "pct_cost_increase", "pct_roa_increase"],
    "mass_sweep": ["mass_kg", "roa_cells"],
    "grid_sweep": ["points_per_dim", "roa_cells", "seconds"],
}

_TRAIN_DEFAULTS = {
    "learning_rate": 1e-2,
    "epochs": 50,
    "batch_size": 256,
    "seed": 0,
    "level_multiplier": 1.5,
}


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _require_number(value, key: str, *, positive=False, nonnegative=False) -> float:
    if not _is_number(value):
        raise ConfigError(f"field '{key}': expected a number, got {type(value).__name__}")
    if positive and not value > 0:
        raise ConfigError(f"field '{key}': must be > 0, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"field '{key}': must be >= 0, got {value}")
    return float(value)


def _require_int(value, key: str, *, minimum=None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"field '{key}': expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"field '{key}': must be >= {minimum}, got {value}")
    return int(value)


def _require_list(value, key: str, elem_check) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"field '{key}': expected a non-empty list")
    return [elem_check(v, f"{key}[{i}]") for i, v in enumerate(value)]


def _check_gain(value, key: str):
    if value is None:
        return None
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise ConfigError(f"field '{key}': expected a matrix (list of lists) or null")
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}': entries must be numbers") from None
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"field '{key}': must be a finite 2-D matrix")
    return [list(map(float, row)) for row in value]


@dataclass
class RunConfig:
    """Fully validated run configuration with all defaults resolved."""

    benchmark: str
    tau: float = 0.01
    grid_points: int = 250
    candidate: str = "quadratic"
    num_particles: int = 20
    max_iter: int = 15000
    stall_window: int = 100
    seed: int = 0
    parameter_pair: object = "auto"
    w1: float = bench.DEFAULT_CO_WEIGHTS[0]
    w2: float = bench.DEFAULT_CO_WEIGHTS[1]
    run_count: int = 5
    output_dir: str = "out"
    exemption_radius: float | None = None
    masses: list = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7])
    particle_counts: list = field(default_factory=lambda: [10, 15, 20, 25, 30])
    grid_points_list: list = field(default_factory=lambda: [51, 101, 151, 201])
    initial_angles: list = field(default_factory=lambda: [np.pi / 6.0, 5.0 * np.pi / 12.0])
    sim_duration: float = 50.0
    gain: list | None = None
    gain_o: list | None = None
    gain_max: list | None = None
    train: dict = field(default_factory=lambda: dict(_TRAIN_DEFAULTS))
    applied_defaults: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        """Canonical echo: every key explicit, JSON-serializable."""
        return {
            "benchmark": self.benchmark,
            "tau": self.tau,
            "grid_points": self.grid_points,
            "candidate": self.candidate,
            "num_particles": self.num_particles,
            "max_iter": self.max_iter,
            "stall_window": self.stall_window,
            "seed": self.seed,
            "parameter_pair": self.parameter_pair,
            "w1": self.w1,
            "w2": self.w2,
            "run_count": self.run_count,
            "output_dir": self.output_dir,
            "exemption_radius": self.exemption_radius,
            "masses": list(self.masses),
            "particle_counts": list(self.particle_counts),
            "grid_points_list": list(self.grid_points_list),
            "initial_angles": list(self.initial_angles),
            "sim_duration": self.sim_duration,
            "gain": self.gain,
            "gain_o": self.gain_o,
            "gain_max": self.gain_max,
            "train": dict(self.train),
        }

    @property
    def omega_eta(self) -> tuple[float | None, float | None]:
        if self.parameter_pair == "auto":
            return None, None
        return float(self.parameter_pair[0]), float(self.parameter_pair[1])

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.train["learning_rate"],
            epochs=self.train["epochs"],
            batch_size=self.train["batch_size"],
            seed=self.train["seed"],
            level_multiplier=self.train["level_multiplier"],
        )


def validate_config(raw: dict) -> RunConfig:
    """Validate a raw config dict under the strict schema."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    known = set(RunConfig.__dataclass_fields__) - {"applied_defaults"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    if "benchmark" not in raw:
        raise ConfigError("field 'benchmark': required")
    if raw["benchmark"] not in bench.BENCHMARK_NAMES:
        raise ConfigError(
            f"field 'benchmark': must be one of {bench.BENCHMARK_NAMES}, got {raw['benchmark']!r}"
        )

    cfg = RunConfig(benchmark=raw["benchmark"])
    defaults = []
    for key in sorted(known - {"benchmark"}):
        if key not in raw:
            defaults.append(f"{key} = {getattr(cfg, key)!r}")
    cfg.applied_defaults = defaults

    if "tau" in raw:
        cfg.tau = _require_number(raw["tau"], "tau", positive=True)
    if "grid_points" in raw:
        cfg.grid_points = _require_int(raw["grid_points"], "grid_points", minimum=3)
    if "candidate" in raw:
        if raw["candidate"] not in ("quadratic", "neural"):
            raise ConfigError("field 'candidate': must be 'quadratic' or 'neural'")
        cfg.candidate = raw["candidate"]
    if "num_particles" in raw:
        cfg.num_particles = _require_int(raw["num_particles"], "num_particles", minimum=2)
    if "max_iter" in raw:
        cfg.max_iter = _require_int(raw["max_iter"], "max_iter", minimum=1)
    if "stall_window" in raw:
        cfg.stall_window = _require_int(raw["stall_window"], "stall_window", minimum=1)
    if "seed" in raw:
        cfg.seed = _require_int(raw["seed"], "seed")
    if "parameter_pair" in raw:
        pair = raw["parameter_pair"]
        if pair != "auto":
            if not (isinstance(pair, list) and len(pair) == 2 and all(_is_number(v) for v in pair)):
                raise ConfigError("field 'parameter_pair': must be 'auto' or [omega, eta]")
            pair = [float(pair[0]), float(pair[1])]
        cfg.parameter_pair = pair
    if "w1" in raw:
        cfg.w1 = _require_number(raw["w1"], "w1", nonnegative=True)
    if "w2" in raw:
        cfg.w2 = _require_number(raw["w2"], "w2", nonnegative=True)
    if cfg.w1 + cfg.w2 <= 0:
        raise ConfigError("fields 'w1'/'w2': at least one weight must be positive")
    if "run_count" in raw:
        cfg.run_count = _require_int(raw["run_count"], "run_count", minimum=1)
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str) or not raw["output_dir"]:
            raise ConfigError("field 'output_dir': must be a non-empty string")
        cfg.output_dir = raw["output_dir"]
    if "exemption_radius" in raw and raw["exemption_radius"] is not None:
        cfg.exemption_radius = _require_number(raw["exemption_radius"], "exemption_radius", positive=True)
    if "masses" in raw:
        cfg.masses = _require_list(raw["masses"], "masses", lambda v, k: _require_number(v, k, positive=True))
    if "particle_counts" in raw:
        cfg.particle_counts = _require_list(
            raw["particle_counts"], "particle_counts", lambda v, k: _require_int(v, k, minimum=2)
        )
    if "grid_points_list" in raw:
        cfg.grid_points_list = _require_list(
            raw["grid_points_list"], "grid_points_list", lambda v, k: _require_int(v, k, minimum=3)
        )
    if "initial_angles" in raw:
        cfg.initial_angles = _require_list(
            raw["initial_angles"], "initial_angles", lambda v, k: _require_number(v, k)
        )
    if "sim_duration" in raw:
        cfg.sim_duration = _require_number(raw["sim_duration"], "sim_duration", positive=True)
    for key in ("gain", "gain_o", "gain_max"):
        if key in raw:
            setattr(cfg, key, _check_gain(raw[key], key))
    if "train" in raw:
        tr = raw["train"]
        if not isinstance(tr, dict):
            raise ConfigError("field 'train': expected an object")
        unknown_tr = set(tr) - set(_TRAIN_DEFAULTS)
        if unknown_tr:
            raise ConfigError(f"field 'train': unknown key(s): {', '.join(sorted(unknown_tr))}")
        merged = dict(_TRAIN_DEFAULTS)
        if "learning_rate" in tr:
            merged["learning_rate"] = _require_number(tr["learning_rate"], "train.learning_rate", positive=True)
        if "epochs" in tr:
            merged["epochs"] = _require_int(tr["epochs"], "train.epochs", minimum=1)
        if "batch_size" in tr:
            merged["batch_size"] = _require_int(tr["batch_size"], "train.batch_size", minimum=1)
        if "seed" in tr:
            merged["seed"] = _require_int(tr["seed"], "train.seed")
        if "level_multiplier" in tr:
            lm = _require_number(tr["level_multiplier"], "train.level_multiplier")
            if not lm > 1:
                raise ConfigError("field 'train.level_multiplier': must be > 1")
            merged["level_multiplier"] = lm
        cfg.train = merged
    return cfg


def parse_config(path) -> RunConfig:
    """Strict-schema load of a JSON config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return validate_config(raw)


def _write_csv(path: Path, header: list[str], rows: list[dict], log: logging.Logger) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    log.info("wrote %s (%d rows)", path, len(rows))


def _gain_list(K: np.ndarray) -> list:
    return [[float(v) for v in row] for row in np.atleast_2d(K)]


def _setup_from_config(cfg: RunConfig, grid_points: int | None = None) -> pipeline.PlantSetup:
    spec = bench.by_name(cfg.benchmark)
    return pipeline.prepare(
        spec,
        tau=cfg.tau,
        grid_points=grid_points or cfg.grid_points,
        candidate_kind=cfg.candidate,
        exemption_radius=cfg.exemption_radius,
        train_config=cfg.train_config(),
    )


def _synthesize(cfg: RunConfig, setup: pipeline.PlantSetup, w1: float, w2: float, seed: int):
    omega, eta = cfg.omega_eta
    return pipeline.synthesize_gain(
        setup,
        w1=w1,
        w2=w2,
        num_particles=cfg.num_particles,
        max_iter=cfg.max_iter,
        stall_window=cfg.stall_window,
        seed=seed,
        omega=omega,
        eta=eta,
    )


def _synthesis_payload(result, setup) -> dict:
    cost, size = pipeline.evaluate_controller(setup, result.gbest)
    return {
        "gain": _gain_list(result.gbest.K),
        "fitness": result.gbest_fitness,
        "cost_metric": cost,
        "roa_cells": size,
        "iterations_run": result.iterations_run,
        "terminated_by": result.terminated_by,
        "omega": result.omega,
        "eta": result.eta,
        "seed": result.seed,
        "history": [list(map(float, row)) for row in result.history],
    }


def _run_synth(cfg: RunConfig, out: Path, log: logging.Logger) -> dict:
    setup = _setup_from_config(cfg)
    result = _synthesize(cfg, setup, cfg.w1, cfg.w2, cfg.seed)
    log.info(
        "synthesized gain %s fitness %.6g after %d iterations (%s)",
        result.gbest.K.ravel(),
        result.gbest_fitness,
        result.iterations_run,
        result.terminated_by,
    )
    return {
        "baseline": {
            "lqr_gain": _gain_list(setup.lqr_controller.K),
            "cost_metric": setup.baseline_cost,
            "roa_cells": setup.baseline_roa,
        },
        "synthesis": _synthesis_payload(result, setup),
    }


def _run_compare(cfg: RunConfig, out: Path, log: logging.Logger) -> dict:
    spec = bench.by_name(cfg.benchmark)
    omega, eta = cfg.omega_eta
    if omega is not None:
        log.info("compare protocol uses the seeded parameter-pair draw; ignoring fixed pair")
    rows = bench.experiment_compare(
        spec,
        cfg.particle_counts,
        run_count=cfg.run_count,
        base_seed=cfg.seed,
        tau=cfg.tau,
        grid_points=cfg.grid_points,
        candidate_kind=cfg.candidate,
        max_iter=cfg.max_iter,
        stall_window=cfg.stall_window,
        co_weights=(cfg.w1, cfg.w2),
    )
    _write_csv(out / "compare.csv", CSV_HEADERS["compare"], rows, log)
    return {"rows": rows, "seeds": [cfg.seed + k for k in range(cfg.run_count)]}


def _run_mass_sweep(cfg: RunConfig, out: Path, log: logging.Logger) -> dict:
    if cfg.benchmark not in ("pendulum_a", "pendulum_b"):
        raise ConfigError("field 'benchmark': mass-sweep requires a pendulum benchmark")
    length = 0.5 if cfg.benchmark == "pendulum_a" else 1.0
    rows = bench.experiment_mass_sweep(
        cfg.masses,
        length=length,
        tau=cfg.tau,
        grid_points=cfg.grid_points,
        candidate_kind=cfg.candidate,
        num_particles=cfg.num_particles,
        max_iter=cfg.max_iter,
        stall_window=cfg.stall_window,
        seed=cfg.seed,
        co_weights=(cfg.w1, cfg.w2),
    )
    _write_csv(out / "mass_sweep.csv", CSV_HEADERS["mass_sweep"], rows, log)
    return {"rows": rows}


def _run_grid_sweep(cfg: RunConfig, out: Path, log: logging.Logger) -> dict:
    spec = bench.by_name(cfg.benchmark)
    rows = bench.experiment_grid_sweep(spec, cfg.grid_points_list, tau=cfg.tau)
    _write_csv(out / "grid_sweep.csv", CSV_HEADERS["grid_sweep"], rows, log)
    return {"rows": rows}


def _run_simulate(cfg: RunConfig, out: Path, log: logging.Logger) -> dict:
    setup = _setup_from_config(cfg)
    spec = setup.bench
    n = spec.plant.state_dim
    controllers = {"K_LQR": setup.lqr_controller}
    if cfg.gain_o is not None:
        controllers["K_O"] = Controller(K=np.asarray(cfg.gain_o, dtype=float))
    else:
        controllers["K_O"] = _synthesize(cfg, setup, cfg.w1, cfg.w2, cfg.seed).gbest
    if cfg.gain_max is not None:
        controllers["K_max"] = Controller(K=np.asarray(cfg.gain_max, dtype=float))
    else:
        controllers["K_max"] = _synthesize(cfg, setup, 0.0, 1.0, cfg.seed).gbest

    steps = int(round(cfg.sim_duration / cfg.tau))
    header = ["time_s"] + [f"state_{i}" for i in range(n)] + ["input", "controller"]
    files = []
    summary = {}
    for idx, angle in enumerate(cfg.initial_angles):
        x0 = np.zeros(n)
        x0[0] = angle
        rows = []
        for label, ctrl in controllers.items():
            traj = simulate(spec.plant, ctrl, x0, cfg.tau, steps)
            for t, x, u in zip(traj.times, traj.states, traj.inputs):
                row = {"time_s": float(t), "input": float(u[0]), "controller": label}
                for i in range(n):
                    row[f"state_{i}"] = float(x[i])
                rows.append(row)
            summary.setdefault(label, {})[f"angle_{idx}"] = {
                "initial_angle": float(angle),
                "diverged": traj.diverged,
                "final_state": [float(v) for v in traj.states[-1]],
            }
        path = out / f"simulate_{idx}.csv"
        _write_csv(path, header, rows, log)
        files.append(path.name)
    return {
        "gains": {label: _gain_list(ctrl.K) for label, ctrl in controllers.items()},
        "initial_angles": [float(a) for a in cfg.initial_angles],
        "csv_files": files,
        "trajectories": summary,
    }


def _run_roa(cfg: RunConfig, out: Path, log: logging.Logger) -> dict:
    setup = _setup_from_config(cfg)
    if cfg.gain is not None:
        ctrl = Controller(K=np.asarray(cfg.gain, dtype=float))
        label = "K_custom"
    else:
        ctrl = setup.lqr_controller
        label = "K_LQR"
    report = lqr_cost_metric(setup.dsys, ctrl, setup.bench.cost)
    if not report.stable:
        raise NumericError("the configured gain does not stabilize the discrete loop")
    A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ ctrl.K
    cand = QuadraticCandidate(P=report.P, step_matrix=A_cl)
    est = certify_roa(cand, linear_step_map(A_cl), setup.grid, exemption_radius=cfg.exemption_radius)

    n = setup.grid.dim
    header = ["controller"] + [f"state_{i}" for i in range(n)] + ["certified"]
    mask = np.zeros(setup.grid.total_cells, dtype=bool)
    mask[est.certified_cells] = True
    rows = []
    for center, flag in zip(setup.grid.centers, mask):
        row = {"controller": label, "certified": int(flag)}
        for i in range(n):
            row[f"state_{i}"] = float(center[i])
        rows.append(row)
    _write_csv(out / "roa.csv", header, rows, log)
    return {
        "controller": label,
        "gain": _gain_list(ctrl.K),
        "threshold_c": est.threshold_c,
        "roa_cells": est.size_cells,
        "size_fraction": est.size_fraction,
        "certified": est.certified,
        "exemption_radius": est.exemption_radius,
    }


_RUNNERS = {
    "synth": _run_synth,
    "compare": _run_compare,
    "mass-sweep": _run_mass_sweep,
    "grid-sweep": _run_grid_sweep,
    "simulate": _run_simulate,
    "roa": _run_roa,
}


def run(subcommand: str, cfg: RunConfig, out_dir=None) -> int:
    """Execute one subcommand; returns the process exit code."""
    if subcommand not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    log = logging.getLogger(f"roaforge.{subcommand}")
    log.setLevel(logging.INFO)
    log.handlers.clear()
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(stream)

    try:
        for line in cfg.applied_defaults:
            log.info("default applied: %s", line)
        try:
            payload = _RUNNERS[subcommand](cfg, out, log)
        except NoStableSeedError as exc:
            log.error("no stable seed controller: %s", exc)
            return 3
        except (DareDivergenceError, NumericError, UnstableClosedLoopError, np.linalg.LinAlgError) as exc:
            log.error("numeric failure: %s", exc)
            return 4

        document = {
            "subcommand": subcommand,
            "config": cfg.to_dict(),
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "result": payload,
        }
        (out / "result.json").write_text(json.dumps(document, sort_keys=True, indent=2) + "\n")
        log.info("wrote %s", out / "result.json")
        return 0
    finally:
        handler.close()
        log.removeHandler(handler)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="roaforge", description=__doc__)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config output directory")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return run(args.subcommand, cfg, out_dir=args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
