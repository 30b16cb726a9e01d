"""Command-line front end for scenario runs.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 run
completed but some sweep points recorded errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ShcdsimError
from .scenarios import (
    SweepResult,
    get_preset,
    load_scenario,
    replay,
    run_scenario,
    scenario_to_toml,
    validate_config,
)
from .version import __version__

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shcdsim",
        description="Seeded sweep harness for self-homodyne SDM link simulation",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run a sweep scenario from a config file")
    run_p.add_argument("config", help="path to a .toml or .json scenario config")
    run_p.add_argument("--out", help="override output_dir from the config")

    val_p = sub.add_parser("validate", help="check a config and report violations")
    val_p.add_argument("config", help="path to a .toml or .json scenario config")

    pre_p = sub.add_parser("preset", help="show or write a starter config")
    pre_p.add_argument("name", help="preset name: coupler or mmf3")
    pre_p.add_argument(
        "--emit", action="store_true", help="write <name>.toml instead of printing"
    )
    pre_p.add_argument("--out", help="target path for --emit")

    rep_p = sub.add_parser("replay", help="re-run a recorded manifest.json")
    rep_p.add_argument("manifest", help="path to manifest.json from a previous run")
    rep_p.add_argument("--out", help="override output_dir for the replayed run")
    return p


def _summarize(result: SweepResult) -> str:
    n = len(result.records)
    bad = result.n_failures
    lines = [
        f"scenario {result.config.name}: {n} records "
        f"({n - bad} ok, {bad} failed)",
        f"outputs in {result.config.output_dir}",
    ]
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = load_scenario(args.config)
            if args.out:
                from dataclasses import replace

                cfg = replace(cfg, output_dir=args.out)
            report = validate_config(cfg)
            if not report.ok:
                for msg in report.violations:
                    print(f"violation: {msg}", file=sys.stderr)
                return EXIT_CONFIG
            result = run_scenario(cfg)
            print(_summarize(result))
            return EXIT_PARTIAL if result.n_failures else EXIT_OK

        if args.verb == "validate":
            cfg = load_scenario(args.config)
            report = validate_config(cfg)
            print(f"aggregate bit rate: {report.bit_rate_gbps:g} Gbps")
            if not report.ok:
                for msg in report.violations:
                    print(f"violation: {msg}", file=sys.stderr)
                return EXIT_CONFIG
            print("config ok")
            return EXIT_OK

        if args.verb == "preset":
            cfg = get_preset(args.name)
            text = scenario_to_toml(cfg)
            if args.emit:
                path = args.out or f"{args.name}.toml"
                parent = os.path.dirname(path)
                if parent:
                    os.makedirs(parent, exist_ok=True)
                with open(path, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
                print(f"wrote {path}")
            else:
                print(text, end="")
            return EXIT_OK

        if args.verb == "replay":
            result = replay(args.manifest, output_dir=args.out)
            print(_summarize(result))
            return EXIT_PARTIAL if result.n_failures else EXIT_OK
    except (ShcdsimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
