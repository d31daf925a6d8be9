"""Command-line experiment runner.

One subcommand per experiment family; every subcommand accepts --config (a
TOML file with one table per scenario), --seed, --agents, --rounds, --out and
--snapshots, with command-line flags overriding the file. Exit codes:
0 success, 2 configuration error, 3 solver non-convergence, 4 I/O error.
"""

import argparse
import sys

try:
    import tomllib
except ModuleNotFoundError:                # Python 3.10
    import tomli as tomllib

from .experiments import (ConfigError, Scenario, emit_csv, run_scenario)
from .pscore import LearningParams, NonConvergence

# subcommand -> scenario kind (drift and compose pick a variant from flags)
COMMANDS = {
    "learn": "static-learn",
    "relearn": "relearn-switch",
    "drift": "drifting-field",
    "sweep": "projector-sweep",
    "compose": "glow-compose",
    "multi": "multi-percept",
    "grover": "grover-sweep",
    "estimate": "estimator-compare",
}

# Scenario fields a config table may set, per subcommand.
_COMMON_KEYS = ("agents", "rounds", "seed", "snapshots", "reward_scale",
                "damping")
_COMMAND_KEYS = {
    "learn": ("phi",),
    "relearn": ("phi", "phi_after", "switch_round"),
    "drift": ("mode", "omega", "amplitude"),
    "sweep": ("direction_counts", "ratio", "grid_points"),
    "compose": ("method", "phi", "compose_round", "glow_threshold",
                "proximity_factor"),
    "multi": ("phi",),
    "grover": ("grid_step", "mc_runs", "glow_threshold"),
    "estimate": ("phi",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldadapt",
        description="Simulate measurement-direction learning under a stray field.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="TOML file with one table per scenario")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--agents", type=int, default=None)
        p.add_argument("--rounds", type=int, default=None)
        p.add_argument("--out", default=f"{command}.csv")
        p.add_argument("--snapshots", action="store_true", default=None,
                       help="also write per-agent snapshots next to --out")
        p.add_argument("--reward-scale", type=float, default=None)
        p.add_argument("--damping", type=float, default=None)
        if command in ("learn", "relearn", "compose", "multi", "estimate"):
            p.add_argument("--phi", type=float, default=None)
        if command == "relearn":
            p.add_argument("--phi-after", type=float, default=None)
            p.add_argument("--switch-round", type=int, default=None)
        if command == "drift":
            p.add_argument("--mode", choices=("linear", "oscillating"), default=None)
            p.add_argument("--omega", type=float, default=None)
            p.add_argument("--amplitude", type=float, default=None)
        if command == "sweep":
            p.add_argument("--counts", default=None,
                           help="comma-separated direction counts")
            p.add_argument("--ratio", type=float, default=None)
            p.add_argument("--grid-points", type=int, default=None)
        if command == "compose":
            p.add_argument("--method", choices=("glow", "bisect"), default=None)
            p.add_argument("--compose-round", type=int, default=None)
            p.add_argument("--glow-threshold", type=float, default=None)
        if command == "grover":
            p.add_argument("--grid-step", type=float, default=None)
            p.add_argument("--mc-runs", type=int, default=None)
            p.add_argument("--glow-threshold", type=float, default=None)
    return parser


def _load_config_table(path: str, command: str) -> dict:
    try:
        with open(path, "rb") as handle:
            document = tomllib.load(handle)
    except OSError as exc:
        raise OSError(f"while reading {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from exc
    table = document.get(command, {})
    if not isinstance(table, dict):
        raise ConfigError("config", f"[{command}] must be a table")
    allowed = set(_COMMON_KEYS) | set(_COMMAND_KEYS[command])
    for key in table:
        if key not in allowed:
            raise ConfigError(key, f"unknown key in [{command}]")
    return table


def _merged(settings: dict, args, name: str, flag: str | None = None):
    """Flag value if given, else config value, else None."""
    value = getattr(args, flag or name, None)
    if value is not None:
        return value
    return settings.get(name)


def scenario_from_args(args) -> Scenario:
    command = args.command
    settings = _load_config_table(args.config, command) if args.config else {}

    def pick(name, default, flag=None):
        value = _merged(settings, args, name, flag)
        return default if value is None else value

    params = LearningParams(float(pick("reward_scale", 1.0)),
                            float(pick("damping", 0.01)))
    scenario = Scenario(
        kind=COMMANDS[command],
        agents=int(pick("agents", 1000)),
        rounds=int(pick("rounds", 1000)),
        seed=int(pick("seed", 0)),
        params=params,
        snapshots=bool(pick("snapshots", False)),
    )

    if command in ("learn", "relearn", "compose", "multi", "estimate"):
        scenario.phi = float(pick("phi", 0.0))
    if command == "relearn":
        phi_after = _merged(settings, args, "phi_after")
        scenario.phi_after = None if phi_after is None else float(phi_after)
        switch = _merged(settings, args, "switch_round")
        scenario.switch_round = None if switch is None else int(switch)
    if command == "drift":
        mode = pick("mode", "linear")
        scenario.kind = "oscillating-field" if mode == "oscillating" else "drifting-field"
        scenario.drift_mode = mode
        omega = _merged(settings, args, "omega")
        scenario.omega = None if omega is None else float(omega)
        scenario.amplitude = float(pick("amplitude", scenario.amplitude))
    if command == "sweep":
        counts = _merged(settings, args, "direction_counts", "counts")
        if counts is not None:
            if isinstance(counts, str):
                try:
                    counts = [int(c) for c in counts.split(",") if c.strip()]
                except ValueError as exc:
                    raise ConfigError("direction_counts", str(exc)) from exc
            scenario.direction_counts = tuple(int(c) for c in counts)
        scenario.ratio = float(pick("ratio", scenario.ratio))
        scenario.grid_points = int(pick("grid_points", scenario.grid_points))
    if command == "compose":
        method = pick("method", "glow")
        scenario.kind = "bisect-compose" if method == "bisect" else "glow-compose"
        scenario.compose_method = method
        step = _merged(settings, args, "compose_round")
        scenario.compose_round = None if step is None else int(step)
        scenario.glow_threshold = float(pick("glow_threshold", scenario.glow_threshold))
        scenario.proximity_factor = float(pick("proximity_factor",
                                               scenario.proximity_factor))
        if scenario.kind == "glow-compose" and "rounds" not in settings \
                and args.rounds is None:
            scenario.rounds = 6000       # room for every agent to compose
    if command == "estimate" and "agents" not in settings and args.agents is None:
        scenario.agents = 10
        if "rounds" not in settings and args.rounds is None:
            scenario.rounds = 1500
    if command == "grover":
        scenario.grid_step = float(pick("grid_step", scenario.grid_step))
        scenario.mc_runs = int(pick("mc_runs", scenario.mc_runs))
        scenario.glow_threshold = float(pick("glow_threshold", scenario.glow_threshold))
    return scenario


def _snapshot_path(out: str) -> str:
    stem, dot, suffix = out.rpartition(".")
    if not dot:
        return out + "_snapshots.csv"
    return f"{stem}_snapshots.{suffix}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = scenario_from_args(args)
        result = run_scenario(scenario)
        emit_csv(result, args.out,
                 snapshot_path=_snapshot_path(args.out) if scenario.snapshots else None)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NonConvergence as exc:
        print(f"solver failed to converge: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
