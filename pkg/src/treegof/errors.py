"""Exception hierarchy shared by all treegof modules."""


class TreegofError(Exception):
    """Base class for all errors raised by this package."""


class DataError(TreegofError):
    """Malformed or inconsistent input data (labels, files, model specs)."""


class SpaceMismatchError(DataError):
    """Two objects built over different tree spaces were combined."""


class SuffixClosureError(DataError):
    """A node set that must be suffix-closed contains an orphan node."""


class GuardError(TreegofError):
    """A brute-force enumeration was requested beyond its size guard."""


class UndefinedContextError(DataError):
    """A transition estimate was requested for a context with no occurrences."""


class SolverError(TreegofError):
    """Internal consistency failure in the min-cut solver (a bug, not bad data)."""
