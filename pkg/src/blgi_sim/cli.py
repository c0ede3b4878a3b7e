"""``blgi-sim`` command line.

Each experiment is a subcommand::

    blgi-sim blgi-phi-sweep --preset paper-like --mode exact --out phi.csv
    blgi-sim visibility-sweep --config sweep.toml --seed 7 --shots 100000
    blgi-sim compare-mc blgi-phi-sweep --preset ideal --shots 100000
    blgi-sim presets

Flags override values from ``--config``, which override the preset.  On
failure a one-line JSON object ``{"error": <category>, "message": ...}`` is
written to stderr and the exit code is nonzero (2 config, 3 I/O, 4 other).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import EXPERIMENTS, FORMATS, MODES, PRESETS, load_config
from .errors import BlgiError, ConfigError
from .sweep import compare_exact_mc, render_report, run_sweep

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_OTHER = 4


class _Parser(argparse.ArgumentParser):
    """Usage errors follow the same JSON-on-stderr contract as runtime errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int, help="shots per configuration (all experiments)")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out", help="output file; .json selects JSON unless --format is given")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--workers", type=int, help="processes across grid points (0 = one per CPU)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blgi-sim", description="Bell-Leggett-Garg simulation sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name, help=f"run a {name}"))
    cmp = sub.add_parser("compare-mc", help="z-scores of Monte Carlo against exact results")
    cmp.add_argument("experiment", choices=[e for e in EXPERIMENTS if e != "calibration-curves"])
    _add_common(cmp)
    cmp.add_argument("--calibration-scale", type=float, default=1.0,
                     help="multiply the Monte Carlo calibration factors (harness check)")
    sub.add_parser("presets", help="print the named presets as JSON")
    return parser


def _overrides(args, experiment: str) -> dict:
    return {
        "experiment": experiment,
        "preset": args.preset,
        "seed": args.seed,
        "shots": args.shots,
        "mode": args.mode,
        "output": args.out,
        "format": args.format,
        "workers": args.workers,
    }


def _run(args) -> int:
    if args.command == "presets":
        print(json.dumps(PRESETS, indent=2, sort_keys=True))
        return 0
    if args.command == "compare-mc":
        ov = _overrides(args, args.experiment)
        ov["mode"] = "monte-carlo"
        ov["output"] = None
        cfg = load_config(args.config, **ov)
        points = compare_exact_mc(cfg, args.calibration_scale)
        for p in points:
            print(json.dumps({"sweep_value": p.sweep_value, "exact": p.exact, "mc": p.mc,
                              "sem": p.sem, "z": p.z, "flagged": p.flagged}))
        return 1 if any(p.flagged for p in points) else 0
    cfg = load_config(args.config, **_overrides(args, args.command))
    rows = run_sweep(cfg)
    if not cfg.output:
        sys.stdout.write(render_report(rows, cfg.output_format))
    return 0


def _fail(category: str, message: str, code: int) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        return _fail(exc.category, str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except BlgiError as exc:
        return _fail(exc.category, str(exc), EXIT_OTHER)
    except Exception as exc:  # noqa: BLE001
        return _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_OTHER)


if __name__ == "__main__":
    sys.exit(main())
