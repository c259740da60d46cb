import argparse
import sys

from . import hh_bench, oracle, solve_lp, solve_maxflow, solve_mincost, spectral_report

COMMANDS = {
    "solve-lp": solve_lp,
    "solve-mincost": solve_mincost,
    "solve-maxflow": solve_maxflow,
    "hh-bench": hh_bench,
    "spectral-report": spectral_report,
    "oracle": oracle,
}

parser = argparse.ArgumentParser(description="Run one lossyflow command.")

parser.add_argument('command', choices=sorted(COMMANDS),
                    help="The command to run.")

parser.add_argument('flags', nargs=argparse.REMAINDER,
                    help="Arguments passed on to the command.")


def run(command, flags=None, **kwargs):
    """Run ``command`` with the command-line ``flags``; returns its exit code."""
    if command not in COMMANDS:
        raise ValueError("Invalid command '{0}' provided. Only {1} are supported."
                         .format(command, sorted(COMMANDS)))
    return COMMANDS[command].run(list(flags or []), **kwargs)


def main(argv=None):
    args = parser.parse_args(argv)
    return run(args.command, args.flags)


if __name__ == '__main__':
    sys.exit(main())

    # python -m src.bin.run solve-maxflow samples/maxflow_single.gmax --delta 1e-6
