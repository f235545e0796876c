"""Exception hierarchy shared by all modules."""


class FdmError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(FdmError, ValueError):
    """An argument violates a documented precondition."""


class ResourceLimitError(FdmError):
    """The request would exceed the supported problem size."""


class BranchMismatchError(FdmError, ValueError):
    """A kernel was requested for the wrong side of the local/nonlocal split."""


class KindMismatchError(FdmError, ValueError):
    """A distance matrix of the wrong kind was passed to a kernel."""


class DisconnectedGraphError(FdmError):
    """The neighbour graph has more than one connected component.

    Attributes
    ----------
    n_components : int
    largest : tuple of int
        Sizes of the two largest components (second is 0 if only one exists).
    suggested_threshold : float or None
        Smallest threshold that connects the graph, when it could be computed.
    """

    def __init__(self, n_components, largest, suggested_threshold=None):
        self.n_components = int(n_components)
        self.largest = tuple(int(s) for s in largest)
        self.suggested_threshold = suggested_threshold
        msg = (
            f"neighbour graph is disconnected: {self.n_components} components, "
            f"largest sizes {self.largest[0]} and {self.largest[1]}"
        )
        if suggested_threshold is not None:
            msg += f"; a threshold above {suggested_threshold:.17g} connects it"
        super().__init__(msg)


class SpectralFailureError(FdmError):
    """The eigensolver produced an unusable spectrum (e.g. non-positive eta)."""


class DegenerateEigenspaceError(FdmError):
    """An estimated eigenspace block is rank deficient."""
