"""Exception hierarchy shared by all modules."""


class SubellipticError(Exception):
    """Base class for every error raised by this package."""


class EvaluationError(SubellipticError):
    """A frame coefficient evaluated to a non-finite value."""


class FrameMismatchError(SubellipticError):
    """Two derived vector fields belong to different frames."""


class HormanderError(SubellipticError):
    """The bracket-generating condition could not be certified."""


class StructuralError(SubellipticError):
    """Inputs have the wrong shape or size for the requested operation."""


class GridError(SubellipticError):
    """Bad resolution, empty or disconnected interior."""


class PreconditionError(SubellipticError):
    """A documented precondition was violated by the caller."""


class ParameterError(SubellipticError, ValueError):
    """A numeric parameter is out of its admissible range."""


class SolverError(SubellipticError):
    """Base class for eigensolver failures."""

    def __init__(self, message, residual=None, trajectory=None):
        super().__init__(message)
        self.residual = residual
        self.trajectory = list(trajectory) if trajectory is not None else []


class NonConvergenceError(SolverError):
    """Iteration budget exhausted before the stopping test fired."""


class DivergenceError(SolverError):
    """The energy or Rayleigh value became non-finite."""


class ConfigError(SubellipticError):
    """Invalid configuration document."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where += f" [key '{key}'"
            where += f", line {line}]" if line is not None else "]"
        super().__init__(message + where)
        self.key = key
        self.line = line
