"""
main.py: Entry point for the `por` command line.
Parses arguments, configures logging once and dispatches to the controller.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .controller import PorController, exit_code_for

logger = logging.getLogger(__name__)

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _add_scheme_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scheme")
    group.add_argument("--config", help="scheme config file (key=value, or .yml/.yaml)")
    group.add_argument("--scheme", choices=("basic", "multiblock", "lc-v1", "lc-v2", "sw"))
    group.add_argument("--q", type=int)
    group.add_argument("--n", type=int)
    group.add_argument("--k", type=int)
    group.add_argument("--ell", type=int)
    group.add_argument("--code-kind", choices=("rs", "matrix"))
    group.add_argument("--code-file")


def _add_blocks_options(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--blocks", required=required, help="blocks file written by `por encode`")
    parser.add_argument("--unit", type=int, default=0, help="message unit to use (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="por", description="Proof-of-retrievability toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="repeat for more detail (-v info, -vv debug)")
    commands = parser.add_subparsers(dest="command", required=True)

    encode = commands.add_parser("encode", help="encode a file into a blocks file")
    _add_scheme_options(encode)
    encode.add_argument("--in", dest="input", required=True)
    encode.add_argument("--out", required=True)

    tag = commands.add_parser("tag", help="generate a keyed-scheme key and tag")
    _add_scheme_options(tag)
    _add_blocks_options(tag)
    tag.add_argument("--seed", required=True)
    tag.add_argument("--key-out", required=True)
    tag.add_argument("--tag-out", required=True)

    pairs = commands.add_parser("pairs", help="precompute bounded-use challenge-response pairs")
    _add_scheme_options(pairs)
    _add_blocks_options(pairs)
    pairs.add_argument("--count", type=int, required=True)
    pairs.add_argument("--seed", required=True)
    pairs.add_argument("--out", required=True)

    serve = commands.add_parser("serve", help="run the prover daemon")
    _add_scheme_options(serve)
    _add_blocks_options(serve)
    serve.add_argument("--tag")
    serve.add_argument("--fault", help="corrupt:<o>[,<o>...] | rate:<fraction>:<seed> | drop:<n>")
    serve.add_argument("--listen", default="127.0.0.1:7070")

    audit = commands.add_parser("audit", help="run one audit session")
    _add_scheme_options(audit)
    _add_blocks_options(audit, required=False)
    audit.add_argument("--endpoint", required=True)
    audit.add_argument("--plan", required=True, help="t=..,alpha=..,sampling=with|without,seed=..")
    audit.add_argument("--pairs")
    audit.add_argument("--key")
    audit.add_argument("--yaml", help="also write the report as YAML")

    extract = commands.add_parser("extract", help="extract the file from a remote prover")
    _add_scheme_options(extract)
    extract.add_argument("--endpoint", required=True)
    extract.add_argument("--key", help="keyed scheme: also count responses acceptable under the key")
    extract.add_argument("--yaml")

    analyze = commands.add_parser("analyze", help="distance, threshold and table calculators")
    analyze.add_argument("what", choices=("dstar", "threshold", "max-n", "lower-bound",
                                          "max-n-table", "rejection-table"))
    _add_scheme_options(analyze)
    analyze.add_argument("--d", type=int)
    analyze.add_argument("--succ", type=float)
    analyze.add_argument("--method", choices=("exact", "estimate"), default="exact")
    analyze.add_argument("--gamma", type=int)
    analyze.add_argument("--delta-size", type=int)
    analyze.add_argument("--yaml")

    plan = commands.add_parser("plan", help="choose an audit sample size")
    _add_scheme_options(plan)
    plan.add_argument("--alpha", type=float, default=0.05)
    plan.add_argument("--power", type=float, default=0.9)
    plan.add_argument("--assumed-succ", type=float, required=True)
    plan.add_argument("--t-max", type=int, default=2000)
    plan.add_argument("--t-step", type=int, default=10)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVELS[min(args.verbose, len(LOG_LEVELS) - 1)],
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    controller = PorController()
    handler = getattr(controller, args.command)
    try:
        return handler(args)
    except Exception as e:  # pylint: disable=broad-except
        code = exit_code_for(e)
        logger.debug("Command failed", exc_info=True)
        print(f"por {args.command}: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
