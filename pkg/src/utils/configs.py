# MIT License

# Copyright (c) 2018 the NJUNMT-pytorch authors.

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

import copy

import yaml

__all__ = [
    'add_default_configs',
    'default_base_configs',
    'default_configs',
    'load_configs',
    'pretty_configs'
]


def add_default_configs(configs: dict, default_configs: dict):
    """
    Add default items to current configuration
    """
    for key, value in default_configs.items():
        if key not in configs:
            configs[key] = copy.deepcopy(value)
        elif isinstance(default_configs[key], dict) and isinstance(configs[key], dict):
            add_default_configs(configs[key], default_configs[key])
        else:
            continue

    return configs


def default_base_configs():
    return {
        "spectral_configs": {
            "jacobi_tol": 1e-12,
            "jacobi_max_sweeps": 100,
            "power_restarts": 3,
            "dense_limit": 600,
        },
        "hh_configs": {
            "phi": None,  # None -> log^-3 m
            "beta": None,  # None -> max(1e-4, phi^2 / (1e5 log^2 m))
            "eps_ad": None,  # same rule as beta
            "reset_constant": 5e6,
            "vertex_constant": 6.0,
            "jl_constant": 48.0,
            "jl_max_rows": 1024,
            "strict_preconditions": False,
            "debug_checks": False,
            "weight_ratio": 1e6,
        },
        "linsolve_configs": {
            "lewis_tol": 1e-8,
            "lewis_max_iter": 500,
            "sampling_constant": 40.0,
            "cg_tol": 1e-12,
            "cg_max_iter": None,  # None -> 10 n
            "dense_limit": 500,
        },
        "ipm_configs": {
            "C": 100.0,
            "max_newton_steps": 50,
            "initial_reduction": 0.2,
            "min_reduction": 1e-3,
            "fraction_to_boundary": 0.99,
            "gap_safety": 16.0,
        },
        "bench_configs": {
            "C0": 1.0,  # multiplies the C0 of every sample op
            "check_every": 1,
            "enumeration_budget": 1 << 22,
        }
    }


def default_configs(user_configs=None):
    # init default configs
    base_configs = default_base_configs()

    if user_configs is None:
        return base_configs

    for key in user_configs:
        if key not in base_configs:
            raise ValueError("Invalid config section '{}' provided. Only {} are supported now."
                             .format(key, list(base_configs.keys())))

    # add default values to user_configs
    add_default_configs(user_configs, base_configs)

    return user_configs


def load_configs(config_path=None):
    """Read a YAML config file (or nothing) and fill in defaults."""
    if config_path is None:
        return default_configs()

    with open(config_path.strip()) as f:
        configs = yaml.safe_load(f) or {}

    return default_configs(configs)


def pretty_configs(user_configs: dict, prefix=""):
    output = []

    for key, value in user_configs.items():
        if not isinstance(value, dict):
            output.append("{0}{1}: {2}".format(prefix, key, value))
        else:
            output.append("{0}{1}:\n{2}".format(prefix, key, pretty_configs(value, prefix + "  ")))

    return '\n'.join(output)
