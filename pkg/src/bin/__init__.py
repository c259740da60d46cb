import os

from src.utils.common_utils import GlobalNames


def auto_mkdir(path):

    if not os.path.exists(path):
        os.makedirs(path, exist_ok=True)


def add_common_flags(parser, solver=True):
    """Flags every command shares; ``solver`` adds the ones of the LP and flow commands."""

    parser.add_argument('--config_path', type=str, default=None,
                        help="The path to a YAML config file. Defaults are used without it.")

    parser.add_argument('--log_path', type=str, default=None,
                        help="Directory for the log file and tensorboard traces. Nothing is written without it.")

    parser.add_argument('--seed', type=int, default=GlobalNames.SEED,
                        help="Seed of the single random generator. Default is {0}.".format(GlobalNames.SEED))

    parser.add_argument('--json-out', dest="json_out", type=str, default=None,
                        help="Write the JSON result here instead of stdout.")

    if solver:
        parser.add_argument('--delta', type=float, default=None,
                            help="Additive accuracy. Default is the file's value or 1e-5.")

        parser.add_argument('--trace', action="store_true",
                            help="Add the per-step path-following trace to the output.")

        parser.add_argument('--check-oracle', dest="check_oracle", action="store_true",
                            help="Cross-check the answer against vertex enumeration.")

    return parser


def run_command(parser, func, argv=None, **kwargs):
    args = parser.parse_args(argv)

    # Modify some options.
    for k, v in kwargs.items():
        setattr(args, k, v)

    if args.log_path:
        auto_mkdir(args.log_path)

    return func(args)
