import argparse
import sys

from src.main import spectral_report
from . import add_common_flags, run_command

parser = argparse.ArgumentParser()

parser.add_argument('input', type=str, nargs="*",
                    help="GainDimacs files. Random balanced expanders are generated when none is given.")

parser.add_argument('--n', type=int, default=32,
                    help="Vertices of each generated expander. Default is 32.")

parser.add_argument('--degree', type=int, default=4,
                    help="Degree of each generated expander. Default is 4.")

parser.add_argument('--n_graphs', type=int, default=5,
                    help="Number of generated expanders. Default is 5.")

parser.add_argument('--betas', type=str, default="0,0.001,0.01",
                    help="Comma separated balances applied to every generated expander.")

parser.add_argument('--csv-out', dest="csv_out", type=str, default=None,
                    help="Write the CSV here instead of stdout.")

add_common_flags(parser, solver=False)


def run(argv=None, **kwargs):
    return run_command(parser, spectral_report, argv, **kwargs)


if __name__ == '__main__':
    sys.exit(run())

    # python -m src.bin.spectral_report \
    # --n 64 --degree 6 --n_graphs 50 \
    # --betas "0,1e-4,1e-3" \
    # --csv-out "./out/spectral.csv"
