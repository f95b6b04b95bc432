class InvalidArgumentError(ValueError):
    pass


class OutOfDomainError(InvalidArgumentError):
    """Raised when a value falls outside the domain of a projection, for
    instance a latitude beyond the Mercator margin."""

    pass


class BehindCameraError(OutOfDomainError):
    """Raised when a world point has a non-positive homogeneous depth."""

    pass


class UndefinedMetricError(ArithmeticError):
    pass


class RejectedTickError(Exception):
    pass


class OutputExistsError(Exception):
    pass


class InputFormatError(Exception):
    """Raised by the readers in :mod:`vesfuse.formats` with enough context to
    find the offending record."""

    def __init__(self, message, source=None, line=None, field=None):
        super(InputFormatError, self).__init__(message)
        self.message = message
        self.source = source
        self.line = line
        self.field = field

    def __str__(self):
        where = []

        if self.source:
            where.append(str(self.source))

        if self.line is not None:
            where.append(f"line {self.line}")

        if self.field:
            where.append(f"field '{self.field}'")

        return f"{', '.join(where)}: {self.message}" if where else self.message


class UnsortedInputError(InputFormatError):
    pass


class ValidationError(Exception):
    def __init__(self, errors):
        super(ValidationError, self).__init__(errors)
        self.errors = errors
