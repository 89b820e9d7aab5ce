"""Exception types raised across the pipeline."""


class CefrOntoError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(CefrOntoError, ValueError):
    """A metric was asked to work on zero words, zero sentences or zero tokens."""


class MissingWordListError(CefrOntoError, FileNotFoundError):
    """A bundled or user-supplied word list could not be found."""


class UnknownDescriptorError(CefrOntoError, KeyError):
    """A catalog or expression names a descriptor that does not exist."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown descriptor"


class UnknownLabelError(CefrOntoError, ValueError):
    """A label outside the six-level scheme was encountered."""


class CorpusParseError(CefrOntoError, ValueError):
    """A corpus file could not be parsed. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ClassTooSmallError(CefrOntoError, ValueError):
    """A class has too few items for a stratified split."""


class MissingSecondLabelError(CefrOntoError, ValueError):
    """Agreement was requested on items without a second annotation."""


class EmptyNodeError(CefrOntoError, ValueError):
    """Gini impurity was requested for a node with no samples."""


class DimensionMismatchError(CefrOntoError, ValueError):
    """A feature vector does not have the catalog's length."""


class NoPathsForLabelError(CefrOntoError, ValueError):
    """No path rule predicts the requested label."""


class EmptyDefinitionError(CefrOntoError, ValueError):
    """A definition (or definition set) has no body to serialize."""


class ManchesterSyntaxError(CefrOntoError, ValueError):
    """A class expression does not conform to the supported grammar."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownPropertyError(ManchesterSyntaxError):
    """A class expression references a data property missing from the catalog."""
