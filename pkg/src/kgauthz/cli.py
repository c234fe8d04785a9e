"""Command line entry point: ``kgauthz serve|check|scenario|query``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from kgauthz.enforcement import Allowed
from kgauthz.service.api import outcome_to_json, serve
from kgauthz.service.config import ConfigError, load_config
from kgauthz.service.engine import Engine
from kgauthz.service.scenario import ScriptError, load_script, run_scenario
from kgauthz.session import RegistrationError, load_descriptor

EXIT_OK, EXIT_DENIED, EXIT_USAGE = 0, 1, 2


def _cmd_serve(args) -> int:
    serve(load_config(args.config))
    return EXIT_OK


def _cmd_check(args) -> int:
    engine = Engine.from_config(load_config(args.config))
    counts = engine.counts()
    print(f"triples: {counts['triples']}")
    print(f"edges: {counts['edges']}")
    print(f"admin scopes: {counts['admin_scopes']}")
    print(f"roles: {counts['roles']}")
    return EXIT_OK


def _cmd_scenario(args) -> int:
    config = load_config(args.config)
    try:
        script = load_script(args.script)
    except (OSError, ScriptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = run_scenario(script, config)
    for line in result.report:
        print(line)
    print("PASS" if result.passed else "FAIL")
    return EXIT_OK if result.passed else EXIT_DENIED


def _cmd_query(args) -> int:
    engine = Engine.from_config(load_config(args.config))
    try:
        desc = load_descriptor(args.agent)
    except (OSError, ValueError) as exc:
        print(f"error: bad descriptor: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        session = engine.register(desc)
    except RegistrationError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}))
        return EXIT_DENIED
    outcome = engine.enforce(session, args.query)
    print(json.dumps(outcome_to_json(outcome), indent=2, sort_keys=True))
    return EXIT_OK if isinstance(outcome, Allowed) else EXIT_DENIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgauthz", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("check", help="validate all configured inputs and print counts")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("scenario", help="run a scenario script")
    p.add_argument("--config", required=True)
    p.add_argument("script")
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("query", help="one-shot register + enforce")
    p.add_argument("--config", required=True)
    p.add_argument("--agent", required=True, help="agent descriptor file")
    p.add_argument("query")
    p.set_defaults(func=_cmd_query)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
