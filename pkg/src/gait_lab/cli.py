"""Command-line front end: simulate the models, export traces, render figures.

Subcommands: ``slip``, ``walker``, ``crawler``, ``periodic`` (fixed-point
search), ``sweep`` (batch runs over one parameter, executed concurrently).

Configuration comes from an optional flat ``key = value`` file
(``#`` comments allowed) with command-line flags taking precedence.
Unknown keys are rejected and every physical parameter is validated before
any simulation starts.

Exit codes: 0 on success; 1 on a configuration/validation error with a
one-line diagnostic naming the offending key; 2 on a simulation failure
(fall, divergence, failed convergence, I/O failure) - the trace up to the
failure is still written when an output path was given.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, crawler, report, slip, walker
from .errors import (
    FallDuringCycle,
    FixedPointNoConvergence,
    IntegrationDiverged,
    UnreachableTouchdown,
)

MODEL_PARAM_KEYS = {
    "slip": {
        "mass": "m",
        "stiffness": "k",
        "rest_length": "l0",
        "gravity": "g",
        "omega": "omega",
        "u_hip": "u_hip",
        "u_axial": "u_axial",
    },
    "walker": {
        "trunk_mass": "M",
        "gravity": "g",
        "com_height": "z_c",
        "lean": "lean",
        "swing_rate_max": "swing_rate_max",
        "step_angle": "step_angle",
        "stride_period": "stride_period",
    },
    "crawler": {
        "fore_mass": "m_F",
        "hind_mass": "m_H",
        "trunk_len": "trunk_len",
        "leg_len": "leg_len",
        "gravity": "g",
        "crawl_period": "crawl_period",
        "drive_angle_amp": "drive_angle_amp",
    },
}

SEED_KEYS = {
    "slip": ("x", "xdot", "z", "zdot", "theta"),
    "walker": ("com_x", "com_xdot"),
    "crawler": ("com_x", "com_xdot"),
    "periodic": ("z_apex", "xdot_apex", "theta_td"),
}

DEFAULT_PARAMS = {
    "slip": slip.SlipParams(),
    "walker": walker.WalkerParams(),
    "crawler": crawler.QuadParams(),
}

DEFAULT_DURATION = {"slip": 10.0, "walker": 10.0, "crawler": 15.0}
DEFAULT_STEP = {"slip": slip.DEFAULT_STEP, "walker": walker.DEFAULT_STEP, "crawler": crawler.DEFAULT_STEP}
DEFAULT_HOPS = 5


@dataclass
class RunConfig:
    """Fully resolved settings for one simulation run."""

    model: str
    params: dict = field(default_factory=dict)  # user-facing key -> value
    seed_state: dict = field(default_factory=dict)
    duration: float = 10.0
    hops: int = DEFAULT_HOPS
    step: float = 1e-4
    out: str | None = None
    plot: str | None = None


class ConfigError(Exception):
    """Raised for any problem that should exit with code 1."""


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _parse_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno} is not 'key = value': {raw.strip()!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def _parse_seed_state(text: str, model: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"seed_state entry {item!r} is not 'key=value'")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in SEED_KEYS[model]:
            raise ConfigError(f"unknown seed_state key '{key}' for model {model}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ConfigError(f"seed_state key '{key}' has non-numeric value {value!r}") from None
    return out


def _build_params(model: str, overrides: dict[str, float]):
    """Construct validated model parameters, naming the user-facing key on error."""
    key_map = MODEL_PARAM_KEYS["slip" if model == "periodic" else model]
    fields = {key_map[k]: v for k, v in overrides.items()}
    ctor = {
        "slip": slip.SlipParams,
        "periodic": slip.SlipParams,
        "walker": walker.WalkerParams,
        "crawler": crawler.QuadParams,
    }[model]
    try:
        return ctor(**fields)
    except ValueError as exc:
        msg = str(exc)
        for user_key, field_name in key_map.items():
            if msg.startswith(field_name + " "):
                msg = user_key + msg[len(field_name):]
                break
        raise ConfigError(msg) from None


def _resolve_config(args: argparse.Namespace, model: str) -> RunConfig:
    param_keys = MODEL_PARAM_KEYS["slip" if model == "periodic" else model]
    allowed = {"model", "duration", "out", "plot", "step", "seed_state", *param_keys}
    if model == "slip":
        allowed.add("hops")

    cfg = RunConfig(
        model=model,
        duration=DEFAULT_DURATION.get(model, 10.0),
        step=DEFAULT_STEP.get(model, DEFAULT_STEP["slip"]),
    )

    file_entries = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in file_entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key '{key}'")
        try:
            if key == "model":
                if value != model:
                    raise ConfigError(
                        f"config key 'model' is {value!r} but the subcommand is '{model}'"
                    )
            elif key == "duration":
                cfg.duration = float(value)
            elif key == "hops":
                cfg.hops = int(value)
            elif key == "out":
                cfg.out = value
            elif key == "plot":
                cfg.plot = value
            elif key == "step":
                cfg.step = float(value)
            elif key == "seed_state":
                cfg.seed_state.update(_parse_seed_state(value, model))
            else:
                cfg.params[key] = float(value)
        except ValueError:
            raise ConfigError(f"config key '{key}' has non-numeric value {value!r}") from None

    for user_key in param_keys:
        flag_value = getattr(args, f"param_{user_key}", None)
        if flag_value is not None:
            cfg.params[user_key] = flag_value
    if getattr(args, "duration", None) is not None:
        cfg.duration = args.duration
    if getattr(args, "hops", None) is not None:
        cfg.hops = args.hops
    if getattr(args, "step", None) is not None:
        cfg.step = args.step
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "plot", None) is not None:
        cfg.plot = args.plot
    if getattr(args, "seed_state", None):
        cfg.seed_state.update(_parse_seed_state(args.seed_state, model))

    if cfg.duration <= 0.0:
        raise ConfigError(f"duration must be positive (got {cfg.duration})")
    if cfg.step <= 0.0:
        raise ConfigError(f"step must be positive (got {cfg.step})")
    if cfg.hops < 0:
        raise ConfigError(f"hops must be non-negative (got {cfg.hops})")
    return cfg


def _write_trace(trace, cfg: RunConfig) -> int:
    """Write CSV and figure outputs; returns 2 on I/O failure, else 0."""
    try:
        if cfg.out:
            report.write_csv(trace, cfg.out)
        if cfg.plot:
            if isinstance(trace, slip.HopTrace):
                report.write_plot(analysis.extract_curves(trace), cfg.plot)
            elif isinstance(trace, walker.WalkerTrace):
                report.plot_walker_trace(trace, cfg.plot)
            else:
                report.plot_crawler_trace(trace, cfg.plot)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2
    return 0


def run_model(cfg: RunConfig) -> int:
    """Execute one resolved simulation run; shared by subcommands and sweep."""
    p = _build_params(cfg.model, cfg.params)
    seed = cfg.seed_state
    try:
        if cfg.model == "slip":
            # Default launch: a configuration that hops forward repeatedly
            # under the default parameters (foot planted slightly behind
            # vertical at touchdown, moderate forward speed).
            initial = slip.FlightState(
                x=seed.get("x", 0.0),
                xdot=seed.get("xdot", 1.2),
                z=seed.get("z", 1.2 * p.l0),
                zdot=seed.get("zdot", 0.0),
                theta=seed.get("theta", 1.35),
            )
            stop = slip.StopCondition(max_time=cfg.duration, max_hops=cfg.hops)
            try:
                trace = slip.simulate_slip(initial, p, stop, step=cfg.step)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif cfg.model == "walker":
            trace = walker.simulate_walker(
                p,
                cfg.duration,
                step=cfg.step,
                initial_com_x=seed.get("com_x", 0.0),
                initial_com_xdot=seed.get("com_xdot"),
            )
        else:
            trace = crawler.simulate_crawler(
                p,
                cfg.duration,
                step=cfg.step,
                initial_com_x=seed.get("com_x", 0.0),
                initial_com_xdot=seed.get("com_xdot", 0.0),
            )
    except IntegrationDiverged as exc:
        if exc.trace is not None:
            _write_trace(exc.trace, cfg)
        print(f"error: integration diverged: {exc}", file=sys.stderr)
        return 2

    code = _write_trace(trace, cfg)
    if code != 0:
        return code
    falls = trace.event_times("fall")
    if falls:
        print(f"simulation fell at t={falls[0]:.6f} s", file=sys.stderr)
        return 2
    return 0


def _run_periodic(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args, "periodic")
    p = _build_params("periodic", cfg.params)
    seed = analysis.ApexState(
        z_apex=cfg.seed_state.get("z_apex", 1.2 * p.l0),
        xdot_apex=cfg.seed_state.get("xdot_apex", 0.0),
        theta_td=cfg.seed_state.get("theta_td", math.pi / 2),
    )
    step = cfg.step if getattr(args, "step", None) is not None else 1e-4
    try:
        fixed = analysis.find_periodic_gait(seed, p, step=step)
    except (FixedPointNoConvergence, FallDuringCycle, UnreachableTouchdown) as exc:
        print(f"error: periodic gait search failed: {exc}", file=sys.stderr)
        return 2
    print(
        f"periodic apex: z_apex={fixed.z_apex:.12g} xdot_apex={fixed.xdot_apex:.12g} "
        f"theta_td={fixed.theta_td:.12g}"
    )
    if cfg.out:
        try:
            with open(cfg.out, "w", newline="\n") as fh:
                fh.write("z_apex,xdot_apex,theta_td\n")
                fh.write(
                    f"{fixed.z_apex:.15g},{fixed.xdot_apex:.15g},{fixed.theta_td:.15g}\n"
                )
        except OSError as exc:
            print(f"error: cannot write output: {exc}", file=sys.stderr)
            return 2
    return 0


def _run_sweep(args: argparse.Namespace) -> int:
    model = args.model
    if model not in MODEL_PARAM_KEYS:
        return _fail(f"unknown sweep model '{model}'")
    try:
        base = _resolve_config(args, model)
    except ConfigError as exc:
        return _fail(str(exc))
    key, _, values_text = args.param.partition("=")
    key = key.strip()
    if key not in MODEL_PARAM_KEYS[model]:
        return _fail(f"unknown sweep parameter '{key}' for model {model}")
    try:
        values = [float(v) for v in values_text.split(",") if v.strip()]
    except ValueError:
        return _fail(f"sweep parameter '{key}' has a non-numeric value in {values_text!r}")
    if not values:
        return _fail(f"sweep parameter '{key}' needs at least one value")

    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out_dir}: {exc}", file=sys.stderr)
        return 2

    configs = []
    for v in values:
        cfg = RunConfig(
            model=model,
            params={**base.params, key: v},
            seed_state=dict(base.seed_state),
            duration=base.duration,
            hops=base.hops,
            step=base.step,
            out=str(out_dir / f"{model}-{key}-{v:g}.csv"),
            plot=None,
        )
        try:
            _build_params(model, cfg.params)  # validate before spawning workers
        except ConfigError as exc:
            return _fail(str(exc))
        configs.append(cfg)

    jobs = args.jobs if args.jobs else min(len(configs), 4)
    if jobs <= 1 or len(configs) == 1:
        codes = [run_model(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(run_model, configs))
    for cfg, code in zip(configs, codes):
        print(f"{cfg.out}: exit {code}")
    return max(codes)


def _add_common_options(sp: argparse.ArgumentParser, model: str) -> None:
    sp.add_argument("--config", help="flat 'key = value' settings file; flags override it")
    sp.add_argument("--out", help="write the trace as CSV to this path")
    sp.add_argument("--plot", help="render the trace figure to this path (.svg, .png, ...)")
    sp.add_argument(
        "--step",
        type=float,
        help=f"integration step in seconds (default {DEFAULT_STEP.get(model, 1e-4):g})",
    )
    sp.add_argument(
        "--seed-state",
        dest="seed_state",
        help="initial-state overrides, e.g. " + ",".join(f"{k}=..." for k in SEED_KEYS[model]),
    )
    base = DEFAULT_PARAMS["slip" if model == "periodic" else model]
    key_map = MODEL_PARAM_KEYS["slip" if model == "periodic" else model]
    for user_key, field_name in key_map.items():
        sp.add_argument(
            f"--{user_key.replace('_', '-')}",
            dest=f"param_{user_key}",
            type=float,
            help=f"{user_key} (default {getattr(base, field_name):g})",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gait-lab",
        description="Planar template models of legged locomotion: run, export, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("slip", help="spring-mass running model")
    _add_common_options(sp, "slip")
    sp.add_argument("--hops", type=int, help=f"stance phases to complete (default {DEFAULT_HOPS})")
    sp.add_argument("--duration", type=float, help=f"time limit in seconds (default {DEFAULT_DURATION['slip']:g})")

    sp = sub.add_parser("walker", help="pendulum walking model")
    _add_common_options(sp, "walker")
    sp.add_argument("--duration", type=float, help=f"run length in seconds (default {DEFAULT_DURATION['walker']:g})")

    sp = sub.add_parser("crawler", help="quadruped crawling model")
    _add_common_options(sp, "crawler")
    sp.add_argument("--duration", type=float, help=f"run length in seconds (default {DEFAULT_DURATION['crawler']:g})")

    sp = sub.add_parser("periodic", help="apex-to-apex fixed-point search for the runner")
    _add_common_options(sp, "periodic")

    sp = sub.add_parser(
        "sweep",
        help="run one model over a list of parameter values (concurrently)",
        description="Base settings come from --config; --param supplies the swept values.",
    )
    sp.add_argument("--model", required=True, choices=sorted(MODEL_PARAM_KEYS))
    sp.add_argument("--param", required=True, metavar="KEY=V1,V2,...", help="parameter values to sweep")
    sp.add_argument("--out-dir", dest="out_dir", required=True, help="directory for the CSV traces")
    sp.add_argument("--jobs", type=int, help="concurrent workers (default: up to 4)")
    sp.add_argument("--config", help="flat 'key = value' settings file for the base run")
    sp.add_argument("--duration", type=float, help="run length in seconds")
    sp.add_argument("--hops", type=int, help="stance phases to complete (slip only)")
    sp.add_argument("--step", type=float, help="integration step in seconds")
    sp.add_argument("--seed-state", dest="seed_state", help="initial-state overrides, e.g. k=v,k=v")

    return parser


def run(argv: list[str] | None = None) -> int:
    """Entry point used by tests; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "sweep":
            return _run_sweep(args)
        if args.command == "periodic":
            return _run_periodic(args)
        cfg = _resolve_config(args, args.command)
        return run_model(cfg)
    except ConfigError as exc:
        return _fail(str(exc))


def main() -> None:
    sys.exit(run(sys.argv[1:]))
