import argparse
import sys

from src.main import solve_maxflow
from . import add_common_flags, run_command

parser = argparse.ArgumentParser()

parser.add_argument('input', type=str,
                    help="The GainDimacs file (p gmax).")

add_common_flags(parser)


def run(argv=None, **kwargs):
    return run_command(parser, solve_maxflow, argv, **kwargs)


if __name__ == '__main__':
    sys.exit(run())

    # python -m src.bin.solve_maxflow samples/maxflow_two_hop.gmax \
    # --delta 1e-5 \
    # --check-oracle \
    # --json-out "./out/solve_maxflow.json"
