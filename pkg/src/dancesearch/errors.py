"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError and its subclasses are data
errors (exit 2), NumericalError is a numerical failure (exit 3), everything
else is a bug.
"""


class DanceSearchError(Exception):
    pass


class ShapeError(DanceSearchError):
    """Operand shapes are incompatible for the requested operation."""


class ContractError(DanceSearchError):
    """A documented precondition or invariant was violated by the caller."""


class DegenerateInputError(DanceSearchError):
    """Input is mathematically degenerate (e.g. normalizing a zero vector)."""


class ConfigError(DanceSearchError):
    """Invalid or inconsistent configuration."""


class InputError(DanceSearchError):
    """Bad user-supplied data: files, manifests, captions, audio."""


class CaptionLookupError(InputError):
    """A caption id is missing from a file-backed embedding table."""


class FormatError(InputError):
    """A serialized file is corrupt or not in the expected format."""


class CheckpointError(InputError):
    """Checkpoint failed to load: bad magic, shape or hash mismatch."""


class SplitConstraintError(InputError):
    """Split protocol constraints cannot be satisfied on this corpus."""


class NumericalError(DanceSearchError):
    """Training or evaluation produced non-finite values."""
