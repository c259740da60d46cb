import argparse
import sys

from src.main import solve_lp
from . import add_common_flags, run_command

parser = argparse.ArgumentParser()

parser.add_argument('input', type=str,
                    help="The LP JSON file.")

add_common_flags(parser)


def run(argv=None, **kwargs):
    return run_command(parser, solve_lp, argv, **kwargs)


if __name__ == '__main__':
    sys.exit(run())

    # python -m src.bin.solve_lp samples/lp_20x8.json \
    # --delta 1e-5 \
    # --check-oracle \
    # --json-out "./out/solve_lp.json"
