"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class ShapeError(ValueError):
    """Tensor arguments with incompatible shapes."""


class StateError(RuntimeError):
    """Backward pass invoked with a missing, stale, or already-consumed cache."""


class TrainingError(RuntimeError):
    """Non-finite loss or gradient; aborts the run with epoch/batch context."""


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


class EmptyDatasetError(ParseError):
    """Input file contained no records."""


class LabelError(ValueError):
    """Unrecognized label string."""


class ProtocolError(ValueError):
    """Evaluation-protocol violation (missing event tags, unlabeled test data)."""
