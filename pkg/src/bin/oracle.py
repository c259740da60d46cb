import argparse
import sys

from src.main import oracle
from . import add_common_flags, run_command

parser = argparse.ArgumentParser()

parser.add_argument('input', type=str,
                    help="An LP JSON file (.json) or a GainDimacs file.")

add_common_flags(parser, solver=False)


def run(argv=None, **kwargs):
    return run_command(parser, oracle, argv, **kwargs)


if __name__ == '__main__':
    sys.exit(run())

    # python -m src.bin.oracle samples/lp_20x8.json
