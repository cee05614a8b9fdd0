"""Exception hierarchy. Every error raised by the library derives from CbmError."""


class CbmError(Exception):
    """Base class for library errors."""


class SignalTooShort(CbmError):
    pass


class DegenerateWindow(CbmError):
    pass


class ZeroVarianceFeature(CbmError):
    def __init__(self, column, name=None):
        self.column = column
        self.name = name
        label = f"{column} ({name})" if name else str(column)
        super().__init__(f"feature column {label} has zero variance")


class ParseError(CbmError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownLabel(CbmError):
    pass


class ClassTooSmall(CbmError):
    pass


class ConfigError(CbmError):
    pass


class InvalidK(CbmError):
    pass


class NonFiniteLoss(CbmError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite at epoch {epoch}")


class SingularCovariance(CbmError):
    pass


class EmptyClass(CbmError):
    pass


class EmptyPool(CbmError):
    pass


class DimensionMismatch(CbmError):
    pass


class LengthMismatch(CbmError):
    pass


class GateFailure(CbmError):
    """No victim model passed the cross-validation gate."""

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)
