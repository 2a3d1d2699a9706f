"""Exception hierarchy shared by all modules."""


class PlatoonError(Exception):
    """Base class for every error raised by this package."""


class TopologyError(PlatoonError, ValueError):
    """An adjacency matrix violates a platoon topology invariant."""


class ConsistencyError(PlatoonError):
    """Internal inputs disagree with each other (e.g. a neighbour state is missing)."""


class SimulationDivergedError(PlatoonError, ArithmeticError):
    """The closed loop produced a non-finite state."""

    def __init__(self, message, k=None, vehicle=None):
        super().__init__(message)
        self.k = k
        self.vehicle = vehicle


class SolverError(PlatoonError):
    """A feasibility backend misbehaved (bad witness, unknown backend name)."""


class ConfigError(PlatoonError, ValueError):
    """Scenario config could not be parsed or validated.

    ``location`` is the offending ``section.key``, when there is one.
    """

    def __init__(self, message, location=None):
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class IngestionError(PlatoonError, ValueError):
    """A CSV input file is malformed."""

    def __init__(self, message, path=None, line=None):
        prefix = ""
        if path is not None:
            prefix = f"{path}"
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)
        self.path = path
        self.line = line
