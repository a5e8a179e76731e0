"""Exception types shared across the package."""


class SebrangeError(Exception):
    """Base class for package-specific errors."""


class ShapeError(SebrangeError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class ConfigError(SebrangeError, ValueError):
    """A configuration value or combination is invalid."""


class ContractError(SebrangeError, TypeError):
    """A caller violated an API contract (e.g. non-scalar objective)."""


class BipartiteViolation(SebrangeError, ValueError):
    """An edge would connect two nodes of the same kind."""


class DuplicateEdgeError(SebrangeError, ValueError):
    """The (user, battery, timestep) edge already exists."""


class SampleSizeError(SebrangeError, ValueError):
    """Too few samples for the requested statistic."""


class AlignmentError(SebrangeError, ValueError):
    """Prediction and label batches do not cover the same timesteps."""


class CheckpointMismatch(SebrangeError, ValueError):
    """Checkpoint was produced under a different resolved configuration."""


class NumericError(SebrangeError, ArithmeticError):
    """A numeric solve failed (singular system, non-finite values)."""


class ParseError(SebrangeError, ValueError):
    """A data file could not be parsed. Carries the offending line number."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class VersionError(ParseError):
    """A data file header declares an unsupported format version."""
