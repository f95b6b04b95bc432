import dataclasses
import math

import numpy as np
from cerberus import Validator as _Validator


def is_dataclass_obj(obj):
    """Checks if an object is a dataclass instance (not a dataclass type)."""
    return dataclasses.is_dataclass(obj) and not isinstance(obj, type)


def _plain(value):
    if is_dataclass_obj(value):
        return export_data(value)

    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]

    if isinstance(value, np.generic):
        return value.item()

    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]

    if isinstance(value, (set, frozenset)):
        return sorted(_plain(v) for v in value)

    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}

    return value


class ExportData:
    """Creates a callable object that converts dataclass instances (the value
    types of :mod:`vesfuse.model`) to plain python objects ready to be dumped
    as JSON.
    """

    def __init__(self, exclude=()):

        #: A global list of field names to exclude. This takes precedence over
        #: the parameters ``include`` and/or ``exclude`` of this instance call.
        self.exclude = tuple(exclude)

    def __call__(self, obj, include=(), exclude=()):
        """Converts dataclass instances into python serializable objects. It
        can take a single instance or a list of them.

        By default, all fields are included in the output, unless a list of
        field names are provided to the parameters ``include`` or ``exclude``.
        The latter has precedence over the former. Nested dataclasses, numpy
        arrays and numpy scalars are converted recursively.

        :param obj: A dataclass instance or a list of them.
        :param include: tuple, list or set.
        :param exclude: tuple, list or set.
        """

        if isinstance(obj, (list, tuple)):
            return [self(item, include, exclude) for item in obj]

        if not is_dataclass_obj(obj):
            raise ValueError("Pass a valid dataclass instance")

        exclude = tuple(exclude) + self.exclude
        data = {}

        for field in dataclasses.fields(obj):
            name = field.name

            if field.metadata.get("export") is False:
                continue

            if (not include or name in include) and name not in exclude:
                data[name] = _plain(getattr(obj, name))

        return data


#: Converts dataclass instances into python serializable objects.
#:
#: This is an instance of :class:`ExportData` so head on to the
#: :meth:`~ExportData.__call__` method to known how this work.
export_data = ExportData()


def finite(*values):
    """True when every value is a real number different from NaN and ±inf."""
    try:
        return all(math.isfinite(float(v)) for v in values)
    except (TypeError, ValueError):
        return False


class Validator(_Validator):
    """Cerberus validator with the extra rules used by configuration and
    scenario documents."""

    def _validate_matrix_shape(self, shape, field, value):
        """Checks that a list of lists has the given number of rows and
        columns.

        The rule's arguments are validated against this schema:
        {'type': 'list', 'items': [{'type': 'integer'}, {'type': 'integer'}]}
        """

        rows, cols = shape

        if not isinstance(value, list) or len(value) != rows:
            self._error(field, f"Must be a {rows}x{cols} matrix")
            return

        for row in value:
            if not isinstance(row, list) or len(row) != cols:
                self._error(field, f"Must be a {rows}x{cols} matrix")
                return

            if not finite(*row):
                self._error(field, "Matrix entries must be finite numbers")
                return

    def _validate_increasing(self, increasing, field, value):
        """Checks that the ``t`` keys of a list of mappings are strictly
        increasing.

        The rule's arguments are validated against this schema:
        {'type': 'boolean'}
        """

        if not increasing or not isinstance(value, list):
            return

        times = [item.get("t") for item in value if isinstance(item, dict)]

        if any(b is None or a is None or b <= a for a, b in zip(times, times[1:])):
            self._error(field, "Times must be strictly increasing")


def first_error_path(errors, prefix=()):
    """Walks a Cerberus error tree and returns the dotted path of the first
    leaf error together with its message."""

    for key in sorted(errors, key=str):
        value = errors[key]
        path = prefix + (str(key),)

        for item in value if isinstance(value, list) else [value]:
            if isinstance(item, dict):
                return first_error_path(item, path)

            return ".".join(path), str(item)

    return ".".join(prefix), "invalid value"
