"""Command-line front end: runs, parameter sweeps, and validation suites.

Exit codes are a stable contract: 0 pass, 1 check failure, 2 usage or
config error. Identical config + seed produces byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from importlib import resources
from pathlib import Path

from . import simulator
from .inner_loop import ControllerParams
from .outer_loop import BaselineGains, linear_iss_gain


class ConfigError(ValueError):
    """Malformed run configuration; message names the offending field."""


_CONTROLLER_KEYS = frozenset(
    f.name for f in dataclasses.fields(ControllerParams)
)
_GAIN_KEYS = frozenset(f.name for f in dataclasses.fields(BaselineGains))
_SCALAR_KEYS = frozenset({"duration", "step_size", "omega0"})
_VECTOR_KEYS = frozenset({"x0", "lam0"})
_STRING_KEYS = frozenset({"trajectory", "mode", "engine"})
_ALL_KEYS = _CONTROLLER_KEYS | _GAIN_KEYS | _SCALAR_KEYS | _VECTOR_KEYS | _STRING_KEYS


def _parse_float(field: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"config field {field!r}: cannot parse {raw!r} as a number") from None


def _parse_vector(field: str, raw: str) -> tuple[float, ...]:
    return tuple(_parse_float(field, part) for part in raw.split(","))


def read_config_text(text: str) -> dict:
    """Parse flat key = value lines into a raw option dict."""
    options: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown config field {key!r}")
        if key in options:
            raise ConfigError(f"line {lineno}: duplicate config field {key!r}")
        if key in _STRING_KEYS:
            options[key] = raw
        elif key in _VECTOR_KEYS:
            options[key] = _parse_vector(key, raw)
        else:
            options[key] = _parse_float(key, raw)
    return options


def build_config(options: dict) -> simulator.SimConfig:
    """Assemble a SimConfig from a raw option dict."""
    kwargs: dict = {}
    for key in _SCALAR_KEYS | _VECTOR_KEYS | _STRING_KEYS:
        if key in options:
            kwargs[key] = options[key]
    try:
        controller = ControllerParams(
            **{k: options[k] for k in _CONTROLLER_KEYS if k in options}
        )
        gains = BaselineGains(**{k: options[k] for k in _GAIN_KEYS if k in options})
        return simulator.SimConfig(controller=controller, gains=gains, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Path) -> simulator.SimConfig:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(read_config_text(text))


def bundled_config_path(name: str = "paper_square.cfg") -> Path:
    return Path(resources.files("pivoted_tracking") / "configs" / name)


def _naive_report(result: simulator.RunResult) -> str:
    lines = ["naive-mode run report"]
    lines.append(f"  completed = {result.completed}")
    event = result.singular_event
    if event is None:
        lines.append("  singular_event = none")
    else:
        lines.append("  singular_event:")
        for key in sorted(event):
            lines.append(f"    {key} = {event[key]}")
    return "\n".join(lines)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(Path(args.config))
    if args.mode is not None and args.mode != config.mode:
        config = dataclasses.replace(config, mode=args.mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    try:
        result = simulator.run(config)
    except simulator.SimulationDiverged as exc:
        print(f"run diverged: {exc}", file=sys.stderr)
        return 1

    result.log.to_csv(out / "log.csv")
    if config.mode == "put":
        report = simulator.certify(result)
        (out / "report.txt").write_text(report.format_text() + "\n")
        print(report.format_text())
        return 0 if result.completed and report.passed else 1
    text = _naive_report(result)
    (out / "report.txt").write_text(text + "\n")
    print(text)
    return 0


_SWEEPABLE = ("r", "k_a", "k_omega", "step_size")


def _sweep_config(base: simulator.SimConfig, param: str, value: float) -> simulator.SimConfig:
    if param == "step_size":
        return dataclasses.replace(base, step_size=value)
    controller = dataclasses.replace(base.controller, **{param: value})
    return dataclasses.replace(base, controller=controller)


def cmd_sweep(args: argparse.Namespace) -> int:
    raw = [part for part in args.values.split(",") if part.strip()]
    if not raw:
        print("sweep: empty value list", file=sys.stderr)
        return 2
    try:
        values = [float(part) for part in raw]
    except ValueError as exc:
        print(f"sweep: {exc}", file=sys.stderr)
        return 2
    base = load_config(Path(args.config)) if args.config else load_config(bundled_config_path())

    rows = []
    for value in values:
        config = _sweep_config(base, args.param, value)
        bound = linear_iss_gain(config.controller.r, config.gains)
        try:
            result = simulator.run(config)
        except simulator.SimulationDiverged:
            rows.append((value, math.nan, bound, False))
            continue
        err = result.log.error_norm()
        tail = err[result.log.t >= config.duration - simulator.FINAL_WINDOW]
        rows.append((value, float(tail.max()), bound, result.completed))

    ok = all(row[3] for row in rows)
    if args.param == "r":
        by_r = sorted(rows)
        for value, final_err, bound, _ in by_r:
            if final_err > bound:
                ok = False
        for (_, lo, _, _), (_, hi, _, _) in zip(by_r, by_r[1:]):
            # limsup of the error is nondecreasing in the ball radius
            if lo > hi + 1e-9:
                ok = False

    header = f"{args.param:>12s} {'final_err':>14s} {'iss_bound':>14s} {'completed':>9s}"
    lines = [header]
    for value, final_err, bound, completed in rows:
        lines.append(f"{value:12.6g} {final_err:14.6e} {bound:14.6e} {str(completed):>9s}")
    table = "\n".join(lines)
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_lines = [f"# pivoted-tracking sweep v1", f"{args.param},final_err,iss_bound,completed"]
        for value, final_err, bound, completed in rows:
            csv_lines.append(f"{value!r},{final_err!r},{bound!r},{int(completed)}")
        (out / "sweep.csv").write_text("\n".join(csv_lines) + "\n")
    return 0 if ok else 1


def cmd_validate(args: argparse.Namespace) -> int:
    from . import validate

    failures = validate.run_suites(args.suite, args.seed)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivoted-tracking",
        description="Closed-loop simulation and validation for the pivoted-thruster tracking controller.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one closed-loop simulation and write artifacts")
    p_sim.add_argument("--config", required=True, help="path to a flat key=value run config")
    p_sim.add_argument("--mode", choices=("put", "naive"), default=None,
                       help="override the config's controller mode")
    p_sim.add_argument("--out", required=True, help="output directory for log.csv and report.txt")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="rerun the maneuver over a list of parameter values")
    p_sweep.add_argument("--param", required=True, choices=_SWEEPABLE)
    p_sweep.add_argument("--values", required=True, help="comma-separated numeric list")
    p_sweep.add_argument("--config", default=None, help="base config (default: bundled maneuver)")
    p_sweep.add_argument("--out", default=None, help="optional directory for sweep.csv")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run the randomized property suites")
    p_val.add_argument("--suite", default="all",
                       choices=("all", "shaping", "geometry", "inner_loop", "outer_loop", "certificates"))
    p_val.add_argument("--seed", type=int, default=0)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
