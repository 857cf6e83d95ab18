import sys
from argparse import ArgumentParser

from pydantic import ValidationError

from .pipeline import COMMANDS, Pipeline
from .utils.errors import ConfigError

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = ArgumentParser(prog='mvreflect',
                            description='Simulate and verify reflecting McKean-Vlasov SDEs.')
    parser.add_argument('command', type=str, choices=COMMANDS,
                        help='Command to run.\n' + \
                             '-simulate: particle system (or frozen-flow run), writes flow.csv and stats.csv\n' + \
                             '-verify: statistical checks, writes reports.csv and summary.txt\n' + \
                             '-picard: Picard iteration of the frozen-flow map, writes picard.csv\n' + \
                             '-couple: coupling by change of measure, writes coupling.csv and pairs.csv\n' + \
                             '-pde-compare: particles against the finite-volume density, writes compare.csv\n')
    parser.add_argument('--config', type=str, required=True,
                        help='JSON run configuration.\n' + \
                             'Example use:\n' + \
                             'python -m mvreflect simulate --config runs/ou.json --out out/ou\n')
    parser.add_argument('--out', type=str, required=True,
                        help='Output directory; created if missing and locked while the command runs.\n')
    parser.add_argument('--seed', type=int, default=None,
                        help='Unsigned 64-bit seed overriding sim.seed.\n')
    parser.add_argument('--checks', type=str, default=None,
                        help='Comma separated checks for the verify command, e.g. moment_bound,w2_contraction.\n' + \
                             'Default: the checks listed in the configuration.\n')
    parser.add_argument('--threads', type=int, default=None,
                        help='Worker threads for the particle steps. Affects speed only, never results.\n')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    checks = None
    if args.checks is not None:
        checks = [name.strip() for name in args.checks.split(',') if name.strip()]
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print('error: --seed must be an unsigned 64-bit integer', file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print('error: --threads must be >= 1', file=sys.stderr)
        return EXIT_CONFIG

    try:
        pipeline = Pipeline(args.command, args.config, args.out, seed=args.seed, threads=args.threads,
                            checks=checks)
    except (ConfigError, ValidationError, FileNotFoundError, KeyError, ValueError, TypeError) as e:
        # unreadable config file, malformed JSON, an unknown registry name or parameter
        print('configuration error: {}'.format(e), file=sys.stderr)
        return EXIT_CONFIG

    try:
        ok = pipeline.run()
    except ConfigError as e:
        print('configuration error: {}'.format(e), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        print('runtime error: {}: {}'.format(type(e).__name__, e), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if ok else EXIT_FAILED_CHECKS


if __name__ == '__main__':
    sys.exit(main())
