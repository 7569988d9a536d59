"""Exception hierarchy shared by the analytic and simulation modules."""


class QueueingError(ValueError):
    """Base class for every model error raised by this package."""


class InvalidParameterError(QueueingError):
    pass


class UnstableQueueError(QueueingError):
    """Raised when offered load reaches or exceeds capacity.

    ``utilization`` carries the offending value and ``entity`` names the
    queue ("switch 3", "controller", ...) when known.
    """

    def __init__(self, message, utilization=None, entity=None):
        super().__init__(message)
        self.utilization = utilization
        self.entity = entity


class ConvergenceError(QueueingError):
    pass


class SingularMatrixError(QueueingError):
    pass
