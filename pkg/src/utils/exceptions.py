__all__ = [
    'ContractViolation',
    'ParseError',
    'InfeasibleError',
    'ConvergenceError'
]


class ContractViolation(ValueError):
    """Raised when an operation is called outside of its pre-conditions."""

    def __init__(self, message, witness=None):
        super(ContractViolation, self).__init__(message)

        # optional numerical evidence, e.g. a null-space vector
        self.witness = witness


class ParseError(ContractViolation):

    def __init__(self, message, path=None, lineno=None):

        if lineno is not None:
            message = "{0}:{1}: {2}".format(path if path is not None else "<input>", lineno, message)

        super(ParseError, self).__init__(message)

        self.path = path
        self.lineno = lineno


class InfeasibleError(RuntimeError):
    """The instance (or the modified instance built for it) admits no feasible point.

    ``report`` holds whatever the solver knows about the failure, such as the
    auxiliary mass and its allowed bound.
    """

    def __init__(self, message, report=None):
        super(InfeasibleError, self).__init__(message)
        self.report = report if report is not None else {}


class ConvergenceError(RuntimeError):

    def __init__(self, message, trajectory=None):
        super(ConvergenceError, self).__init__(message)
        self.trajectory = trajectory if trajectory is not None else []
