"""Command-line front end.

Subcommands reproduce the bundled experiments from a config file (or the
built-in defaults) and write RFC-4180-style CSV: header row, '.' decimal
separator, '\n' newlines, no locale dependence. Identical config and seed
give byte-identical output.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .quadrature import QuadratureError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit_csv(header, rows, path: str | None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_format_cell(c) for c in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _overrides_from_args(args) -> dict:
    tree: dict = {"simulation": {}}
    if args.seed is not None:
        tree["simulation"]["master_seed"] = args.seed
    if args.trials is not None:
        tree["simulation"]["n_trials"] = args.trials
    if args.gain_mode is not None:
        tree["simulation"]["gain_mode"] = args.gain_mode
    if args.policy is not None:
        if args.policy.startswith("beta="):
            try:
                value = float(args.policy.split("=", 1)[1])
            except ValueError:
                raise ConfigError(
                    f"--policy: cannot parse bias value in {args.policy!r}")
            tree["simulation"]["policy"] = "fixed"
            tree["simulation"]["fixed_bias"] = value
        elif args.policy in ("cre", "map"):
            tree["simulation"]["policy"] = args.policy
        else:
            raise ConfigError(
                "--policy must be 'cre', 'map' or 'beta=<float>'")
    if not tree["simulation"]:
        tree.pop("simulation")
    if args.out is not None:
        tree["output"] = {"path": args.out}
    return tree


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavnet",
        description="Dual-engine evaluator for multi-band UAV downlink "
                    "networks: closed-form analysis cross-validated by "
                    "Monte Carlo simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("coverage-sweep", "coverage probability vs SINR threshold"),
            ("rate-vs-density", "per-user rate vs UAV density ratio"),
            ("se-vs-antennas", "spectral efficiency vs antenna count"),
            ("validate", "run the oracle/invariant suite")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH",
                         help="YAML config file (defaults used if omitted)")
        cmd.add_argument("--seed", type=int, metavar="U64",
                         help="override the master seed")
        cmd.add_argument("--trials", type=int, metavar="N",
                         help="override the Monte Carlo trial count")
        cmd.add_argument("--out", metavar="PATH",
                         help="write CSV here instead of stdout")
        cmd.add_argument("--gain-mode", dest="gain_mode",
                         choices=("geometric", "approximate"),
                         help="interferer gain mode for simulations")
        cmd.add_argument("--policy", metavar="{cre,map,beta=<float>}",
                         help="association policy for simulations")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides_from_args(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from . import experiments

    try:
        if args.command == "coverage-sweep":
            header, rows, _ = experiments.coverage_sweep(cfg)
            _emit_csv(header, rows, cfg.out_path)
        elif args.command == "rate-vs-density":
            header, rows, _ = experiments.rate_vs_density(cfg)
            _emit_csv(header, rows, cfg.out_path)
        elif args.command == "se-vs-antennas":
            header, rows, _ = experiments.se_vs_antennas(cfg)
            _emit_csv(header, rows, cfg.out_path)
        elif args.command == "validate":
            results = experiments.validate(
                cfg, progress=lambda m: print(f"# {m}", file=sys.stderr))
            for res in results:
                print(res.line())
            header = ["check", "status", "measured", "bound", "detail"]
            rows = [[r.name, "PASS" if r.passed else "FAIL",
                     float(r.measured), float(r.bound), r.detail]
                    for r in results]
            if cfg.out_path:
                _emit_csv(header, rows, cfg.out_path)
            if not all(r.passed for r in results):
                return EXIT_VALIDATION
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
