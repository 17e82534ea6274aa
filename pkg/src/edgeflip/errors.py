"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: UsageError -> 1,
DataError -> 2, anything else -> 3.
"""


class EdgeflipError(Exception):
    """Base class for all package errors."""


class UsageError(EdgeflipError):
    """Caller violated a precondition (bad id, bad flag, bad direction)."""


class DataError(EdgeflipError):
    """Input data is missing, malformed, or internally inconsistent."""


class MissingLabelError(DataError):
    """A node whose label is required by the computation is unlabeled."""

    def __init__(self, node, name=None):
        self.node = node
        shown = name if name is not None else str(node)
        super().__init__(f"node {shown} is unlabeled but lies inside the influence scope")
