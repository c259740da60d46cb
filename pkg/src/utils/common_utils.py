import json
import random
import time

import numpy as np
import torch

__all__ = [
    'GlobalNames',
    'Timer',
    'Collections',
    'set_seed',
    'as_generator',
    'spawn_generators',
    'torch_generator',
    'should_trigger_by_steps',
    'dump_json'
]


class GlobalNames:
    SEED = 314159

    # relative tolerance for "exact" equalities
    REL_TOL = 1e-9

    FORMAT_VERSION = "v1"


time_format = '%Y-%m-%d %H:%M:%S'


class Timer(object):
    def __init__(self):
        self.t0 = 0

    def tic(self):
        self.t0 = time.time()

    def toc(self, format='m:s', return_seconds=False):
        t1 = time.time()

        if return_seconds is True:
            return t1 - self.t0

        if format == 's':
            return '{0:.2f}'.format(t1 - self.t0)
        m, s = divmod(t1 - self.t0, 60)
        if format == 'm:s':
            return '%d:%02d' % (m, s)
        h, m = divmod(m, 60)
        return '%d:%02d:%02d' % (h, m, s)


class Collections(object):
    """Named lists of values recorded while an algorithm runs.

    Used for the per-field series of the path-following trace.
    """
    _MY_COLLECTIONS_NAME = "my_collections"

    def __init__(self, kv_stores=None, name=None):

        self._kv_stores = kv_stores if kv_stores is not None else {}

        if name is None:
            name = Collections._MY_COLLECTIONS_NAME
        self._name = name

    def add_to_collection(self, key, value):
        """
        Add value to collection

        :type key: str
        :param key: Key of the collection

        :param value: The value which is appended to the collection
        """
        if key not in self._kv_stores:
            self._kv_stores[key] = [value]
        else:
            self._kv_stores[key].append(value)

    def get_collection(self, key, default=None):
        """
        Get the collection given a key

        :type key: str
        :param key: Key of the collection
        """
        if key not in self._kv_stores:
            return [] if default is None else default
        else:
            return self._kv_stores[key]

    def keys(self):
        return list(self._kv_stores.keys())


def set_seed(seed):
    torch.manual_seed(seed)

    random.seed(seed)

    np.random.seed(seed)


def as_generator(seed=None):
    """Turn ``None``, an int, a SeedSequence or a Generator into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = GlobalNames.SEED
    return np.random.default_rng(seed)


def spawn_generators(rng, n):
    """Derive ``n`` independent child generators from ``rng`` deterministically."""
    rng = as_generator(rng)
    seeds = rng.integers(0, 2 ** 63 - 1, size=n)
    return [np.random.default_rng(np.random.SeedSequence(int(s))) for s in seeds]


def torch_generator(rng):
    g = torch.Generator()
    g.manual_seed(int(as_generator(rng).integers(0, 2 ** 62)))
    return g


def should_trigger_by_steps(global_step, every_n_step, debug=False):
    """
    Whether a periodic action (logging, auditing) fires at this step.
    """
    if debug:
        return True

    if every_n_step <= 0:
        return False

    return np.mod(global_step, every_n_step) == 0


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        items = sorted(obj) if isinstance(obj, set) else obj
        return [_to_builtin(v) for v in items]
    if isinstance(obj, np.ndarray):
        return [_to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj, path=None):
    """Canonical JSON: sorted keys, numpy scalars unwrapped, no trailing spaces."""
    text = json.dumps(_to_builtin(obj), sort_keys=True, indent=2) + "\n"

    if path is not None:
        with open(path, "w") as f:
            f.write(text)

    return text
