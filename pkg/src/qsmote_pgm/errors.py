"""Exception hierarchy shared by every module of the package."""


class QsmotePgmError(Exception):
    """Base class for all package errors."""


class InvalidState(QsmotePgmError, ValueError):
    pass


class DimensionOverflow(QsmotePgmError, ValueError):
    pass


class DimensionMismatch(QsmotePgmError, ValueError):
    pass


class EmptyClass(QsmotePgmError, ValueError):
    pass


class NotPSD(QsmotePgmError, ValueError):
    pass


class NotBinary(QsmotePgmError, ValueError):
    pass


class InsufficientMinority(QsmotePgmError, ValueError):
    pass


class ZeroVector(QsmotePgmError, ValueError):
    pass


class SingleClass(QsmotePgmError, ValueError):
    pass


class ParseError(QsmotePgmError, ValueError):
    pass


class SchemaError(QsmotePgmError, KeyError):
    def __str__(self):
        # KeyError wraps its message in quotes otherwise
        return str(self.args[0]) if self.args else ""


class DimensionError(QsmotePgmError, ValueError):
    pass


class StratifyError(QsmotePgmError, ValueError):
    pass


class ModelFormatError(QsmotePgmError, ValueError):
    """Raised when a serialized model file has an unknown layout or version."""
