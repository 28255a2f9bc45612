"""Error types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class InvalidInputError(WorkbenchError):
    """An argument or configuration value violates a precondition."""


class EdgeNotFoundError(WorkbenchError):
    """The requested edge is not present in the graph."""


class InsufficientDataError(WorkbenchError):
    """Not enough snapshot columns to perform the requested fit."""


class DegenerateGeometryError(WorkbenchError):
    """A polygon operation received or produced degenerate geometry."""
