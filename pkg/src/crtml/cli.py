"""``crtml`` command line.

Exit codes: 0 success, 1 computation failure, 2 usage or configuration failure.
"""

import argparse
import json
import sys

from .errors import ConfigError, ContractError, ParseError, PreprocessError, SchemaError
from .experiments import METHODS, ExperimentConfig, run, write_synth

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _arch(text):
    try:
        sizes = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated layer sizes, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("layer sizes must be positive integers")
    return sizes


def _seed(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = _Parser(prog="crtml", description="CRT response classification experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON); omitted means all defaults on a synthetic cohort")
    common.add_argument("--out", required=True, help="output directory for reports and plots")
    common.add_argument("--seed", type=_seed, help="master seed, overrides protocol.seed")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("preprocess", parents=[common], help="filter, clean and write the cohort")
    sub.add_parser("cluster", parents=[common], help="k-means and hierarchical clustering")
    tree = sub.add_parser("tree", parents=[common], help="decision tree with repeated holdout")
    tree.add_argument("--sweep", action="store_true", help="also run the minimum-leaf-size sweep")
    nn = sub.add_parser("nn", parents=[common], help="feedforward network with repeated holdout")
    nn.add_argument("--arch", type=_arch, help="hidden layer sizes, e.g. 20,14")
    nn.add_argument("--search", action="store_true", help="run the architecture search first")
    sub.add_parser("sweep", parents=[common], help="minimum-leaf-size sweep")
    sub.add_parser("compare", parents=[common], help="all three approaches on one cohort")
    sub.add_parser("synth", parents=[common], help="write a synthetic cohort and its role file")
    runp = sub.add_parser("run", parents=[common], help="run one method chosen with --method")
    runp.add_argument("--method", required=True, choices=METHODS)
    return parser


def _load_config(args):
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        config = _load_config(args)
        if args.command == "nn" and args.search:
            config.nn["search"] = True
    except FileNotFoundError as exc:
        print(f"crtml: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ContractError, ValueError, TypeError) as exc:
        print(f"crtml: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    command = args.method if args.command == "run" else args.command
    try:
        if command == "synth":
            written = write_synth(config, args.out)
            print(json.dumps({"out": args.out, "artifacts": written}))
            return EXIT_OK
        options = {}
        if command == "tree":
            options["sweep"] = bool(getattr(args, "sweep", False))
        if command == "nn" and getattr(args, "arch", None):
            options["arch"] = args.arch
        report = run(command, config, args.out, **options)
    except FileNotFoundError as exc:
        print(f"crtml: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SchemaError, ConfigError) as exc:
        print(f"crtml: input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreprocessError, ContractError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"crtml: {command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    summary = {k: report[k] for k in ("kind", "config_hash", "cohort_hash", "seed") if k in report}
    for key in ("average", "best", "selected"):
        if key in report:
            summary[key] = report[key]
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
