import hashlib

from src.utils.common_utils import dump_json

__all__ = [
    'OracleReport',
    'digest'
]


def digest(*inputs):
    """Short content hash of oracle inputs (arrays, numbers, nested lists)."""
    return hashlib.sha1(dump_json(list(inputs)).encode("utf-8")).hexdigest()[:16]


class OracleReport(object):
    """Outcome of comparing a module answer with an independent reference."""

    def __init__(self, name, input_digest, reference, tolerance, passed, details=None):
        self.name = name
        self.input_digest = input_digest
        self.reference = reference
        self.tolerance = tolerance
        self.passed = bool(passed)
        self.details = details if details is not None else {}

    def as_dict(self):
        return {
            "oracle": self.name,
            "input_digest": self.input_digest,
            "reference": self.reference,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }

    def __repr__(self):
        return "OracleReport({0}, passed={1})".format(self.name, self.passed)
