"""Exception kinds raised across the package.

Every kind derives from ``MaxSepError`` and from the builtin it refines, so callers
can catch either ``MaxSepError`` or e.g. ``ValueError``.
"""


class MaxSepError(Exception):
    pass


class InvalidArgumentError(MaxSepError, ValueError):
    pass


class ShapeError(MaxSepError, ValueError):
    pass


class LabelError(MaxSepError, ValueError):
    pass


class ParseError(MaxSepError, ValueError):
    def __init__(self, message: str, *, field: str | None = None, row: int | None = None,
                 column: int | None = None):
        location = []
        if field is not None:
            location.append(f"field={field}")
        if row is not None:
            location.append(f"row={row}")
        if column is not None:
            location.append(f"column={column}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.field = field
        self.row = row
        self.column = column


class IntegrityError(MaxSepError, ValueError):
    pass


class CapacityError(MaxSepError, ValueError):
    def __init__(self, message: str, *, class_index: int):
        super().__init__(message)
        self.class_index = class_index


class DegenerateInputError(MaxSepError, ValueError):
    pass


class UndefinedScoreError(MaxSepError, ArithmeticError):
    pass


class NumericalError(MaxSepError, ArithmeticError):
    pass


class StaleCacheError(MaxSepError, RuntimeError):
    pass


class ConfigError(MaxSepError, ValueError):
    pass


class ResultsError(MaxSepError, RuntimeError):
    pass
