import argparse
import sys

from src.main import solve_mincost
from . import add_common_flags, run_command

parser = argparse.ArgumentParser()

parser.add_argument('input', type=str,
                    help="The GainDimacs file (p gmcf).")

add_common_flags(parser)


def run(argv=None, **kwargs):
    return run_command(parser, solve_mincost, argv, **kwargs)


if __name__ == '__main__':
    sys.exit(run())

    # python -m src.bin.solve_mincost samples/mincost_single.gmcf \
    # --delta 1e-5 \
    # --check-oracle \
    # --json-out "./out/solve_mincost.json"
