class MGTriangleError(Exception):
    pass


class RejectedEdgeError(MGTriangleError, ValueError):
    """A stream element that cannot be an edge of a simple graph (self-loop)."""


class InvalidWedgeError(MGTriangleError, ValueError):
    pass


class StreamParseError(MGTriangleError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InputError(MGTriangleError):
    pass


class UnsupportedWindowError(MGTriangleError):
    pass


class OracleCapError(MGTriangleError):
    pass
