"""Exception types shared across the library.

Every contract violation gets its own class so callers (and the device
server's error-code mapping) can dispatch on type instead of parsing
messages.
"""


class VirtcamError(Exception):
    """Base class for all library errors."""


class OutOfMemory(VirtcamError):
    pass


class NotTopOfStack(VirtcamError):
    pass


class WrongFormat(VirtcamError):
    pass


class OutOfBounds(VirtcamError):
    pass


class DimensionMismatch(VirtcamError):
    pass


class BadKernelSize(VirtcamError):
    pass


class UnsupportedFormat(VirtcamError):
    pass


class MalformedHeader(VirtcamError):
    pass


class TruncatedData(VirtcamError):
    pass


class ImageSmallerThanWindow(VirtcamError):
    pass


class DegenerateRoi(VirtcamError):
    pass


class BadRoi(VirtcamError):
    pass


class MissingDescriptors(VirtcamError):
    pass


class TemplateTooLarge(VirtcamError):
    pass


class ImageTooSmall(VirtcamError):
    pass


class BadThresholds(VirtcamError):
    pass


class BadValue(VirtcamError):
    pass


class SourceExhausted(VirtcamError):
    pass


class FileError(VirtcamError):
    pass


class BadCascade(VirtcamError):
    pass


# Script engine errors (camscript).

class ScriptError(VirtcamError):
    """Base for script-level failures; message carries the source line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "%s (line %d)" % (message, line)
        super().__init__(message)
        self.line = line


class TabInIndent(ScriptError):
    pass


class InconsistentDedent(ScriptError):
    pass


class UnterminatedString(ScriptError):
    pass


class BadSyntax(ScriptError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message, line)
        self.column = column


class ScriptNameError(ScriptError):
    pass


class ScriptTypeError(ScriptError):
    pass


class ZeroDivision(ScriptError):
    pass


class StepLimit(ScriptError):
    pass


class ScriptStopped(ScriptError):
    """Raised internally when the cooperative stop flag is set."""


# Wire protocol errors (devserve).

class CrcMismatch(VirtcamError):
    pass


class Oversize(VirtcamError):
    pass


class NeedMoreData(VirtcamError):
    """Not an error per se: the decoder needs more bytes for a full frame."""
