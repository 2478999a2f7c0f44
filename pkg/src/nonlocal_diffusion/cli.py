"""Command line: ``run <config>``, ``validate <config>``, ``version``.

Exit codes: 0 success, 1 invalid configuration, 2 task failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .scenario import OUTPUT_ENV, ConfigError, load_config, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_TASK = 0, 1, 2


def _load(path: str):
    try:
        return load_config(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
    except ConfigError as exc:
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"error: {exc}{key}", file=sys.stderr)
    return None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nonlocal-diffusion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write artifacts")
    run.add_argument("config")
    run.add_argument("-o", "--output", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    val = sub.add_parser("validate", help="check a scenario and print it with defaults filled in")
    val.add_argument("config")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "version":
        print(__version__)
        return EXIT_OK
    config = _load(args.config)
    if config is None:
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps(config.to_dict(), sort_keys=True, indent=2))
        return EXIT_OK
    manifest = run_scenario(config, args.output)
    if not manifest.ok:
        print(f"error: task {config.task} failed: {manifest.error}", file=sys.stderr)
        return EXIT_TASK
    for name, digest in sorted(manifest.files.items()):
        print(f"{digest}  {name}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
