"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: invalid/degenerate input and file
format problems exit with 2, numerical failures with 1.
"""


class OtsegError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OtsegError, ValueError):
    """Caller supplied an argument outside the documented domain."""


class DegenerateInputError(InvalidInputError):
    """Input is syntactically valid but makes the problem ill-posed
    (e.g. constant logits, which would yield an all-zero cost matrix)."""


class NumericalError(OtsegError, RuntimeError):
    """A solver or training run produced NaN/Inf and cannot continue."""


class FeatureFileError(OtsegError, ValueError):
    """Base class for binary feature/checkpoint file problems."""


class BadMagicError(FeatureFileError):
    """File does not start with the expected magic tag / version."""


class TruncatedPayloadError(FeatureFileError):
    """File ends before the payload announced in the header."""


class NonFiniteDataError(FeatureFileError):
    """Payload contains NaN or Inf entries."""


class LabelParseError(OtsegError, ValueError):
    """A label file line is not an integer; carries the 1-based line number."""

    def __init__(self, line_number: int, content: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: not an integer label: {content!r}")
