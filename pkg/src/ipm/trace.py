from tensorboardX import SummaryWriter

from src.utils.common_utils import Collections

__all__ = [
    'IpmTrace'
]

_SCALARS = ("mu", "centrality", "feasibility", "objective", "newton_steps", "reduction")


class IpmTrace(object):
    """Per-step records of a path-following run.

    Records are kept in memory for the JSON output; with ``log_dir`` they are
    also written as tensorboardX scalars, one tag per field.
    """

    def __init__(self, log_dir=None, tag="ipm"):
        self.records = []
        self.tag = tag
        self._series = Collections(name=tag)
        self._writer = SummaryWriter(log_dir=log_dir) if log_dir is not None else None

    def record(self, **fields):
        step = len(self.records)
        fields = dict(fields, step=step)
        self.records.append(fields)

        for key in _SCALARS:
            if key in fields:
                self._series.add_to_collection(key, float(fields[key]))
                if self._writer is not None:
                    self._writer.add_scalar("{0}/{1}".format(self.tag, key),
                                            scalar_value=float(fields[key]), global_step=step)

    def series(self, key):
        """Values of one scalar field in step order."""
        return self._series.get_collection(key)

    def __len__(self):
        return len(self.records)

    def close(self):
        if self._writer is not None:
            self._writer.close()
            self._writer = None
