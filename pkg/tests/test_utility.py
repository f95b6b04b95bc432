import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pytest

from vesfuse.model import GeoPoint, PixelPoint
from vesfuse.utility import ExportData, Validator, finite, first_error_path

parametrize = pytest.mark.parametrize


@dataclass
class Buoy:
    name: str
    pos: GeoPoint
    readings: np.ndarray
    tags: frozenset = frozenset()
    secret: Optional[str] = field(default=None, metadata={"export": False})


@pytest.fixture
def buoy():
    return Buoy(
        name="B1",
        pos=GeoPoint(114.3, 30.6),
        readings=np.array([1.5, np.float64(2.5)]),
        tags=frozenset({"north", "east"}),
        secret="hidden",
    )


class TestExportData:
    def test_with_invalid_arguments(self):
        message = "Pass a valid dataclass instance"
        export_data = ExportData()

        class NotADataclass(object):
            pass

        with pytest.raises(ValueError, match=message):
            export_data(NotADataclass())

        with pytest.raises(ValueError, match=message):
            export_data(1)

        with pytest.raises(ValueError, match=message):
            export_data(Buoy)

    def test_nested_values(self, buoy):
        data = ExportData()(buoy)

        assert data == {
            "name": "B1",
            "pos": {"lon": 114.3, "lat": 30.6},
            "readings": [1.5, 2.5],
            "tags": ["east", "north"],
        }
        assert type(data["readings"][0]) is float

    def test_field_metadata_excludes_field(self, buoy):
        assert "secret" not in ExportData()(buoy)

    def test_explicit_field_inclusion(self, buoy):
        data = ExportData()(buoy, include=["name", "pos"])

        assert data == {"name": "B1", "pos": {"lon": 114.3, "lat": 30.6}}

    def test_explicit_field_exclusion(self, buoy):
        data = ExportData()(buoy, exclude=["pos", "readings", "tags"])

        assert data == {"name": "B1"}

    def test_exclude_takes_precedence_over_include(self, buoy):
        data = ExportData()(buoy, include=["name", "pos"], exclude=["pos"])

        assert data == {"name": "B1"}

    def test_global_exclusion(self, buoy):
        export_data = ExportData(exclude=["readings"])

        data = export_data(buoy, include=["name", "readings"])

        assert data == {"name": "B1"}

    def test_list_of_instances(self):
        points = [PixelPoint(1.0, 2.0), PixelPoint(3.0, 4.0)]

        assert ExportData()(points) == [{"x": 1.0, "y": 2.0}, {"x": 3.0, "y": 4.0}]


@parametrize(
    "values, expected",
    [
        ((1, 2.5, "3"), True),
        ((), True),
        ((math.nan,), False),
        ((1, math.inf), False),
        ((-math.inf,), False),
        ((None,), False),
        (("abc",), False),
    ],
)
def test_finite(values, expected):
    assert finite(*values) is expected


class TestValidator:
    def test_matrix_shape(self):
        v = Validator({"m": {"type": "list", "matrix_shape": [2, 3]}})

        assert v.validate({"m": [[1, 2, 3], [4, 5, 6]]})
        assert not v.validate({"m": [[1, 2, 3]]})
        assert v.errors == {"m": ["Must be a 2x3 matrix"]}
        assert not v.validate({"m": [[1, 2], [3, 4]]})
        assert not v.validate({"m": [[1, 2, 3], [4, 5, "x"]]})
        assert v.errors == {"m": ["Matrix entries must be finite numbers"]}

    def test_increasing(self):
        v = Validator({"legs": {"type": "list", "increasing": True}})

        assert v.validate({"legs": [{"t": 0}, {"t": 10}, {"t": 20}]})
        assert not v.validate({"legs": [{"t": 0}, {"t": 0}]})
        assert v.errors == {"legs": ["Times must be strictly increasing"]}
        assert not v.validate({"legs": [{"t": 10}, {"t": 5}]})


@parametrize(
    "errors, expected",
    [
        ({"height": ["min value is 0"]}, ("height", "min value is 0")),
        (
            {
                "camera": [{"lat": ["max value is 85"]}],
                "delta": ["must be of number type"],
            },
            ("camera.lat", "max value is 85"),
        ),
        (
            {"vessels": [{0: [{"mmsi": ["required field"]}]}]},
            ("vessels.0.mmsi", "required field"),
        ),
        ({}, ("", "invalid value")),
    ],
)
def test_first_error_path(errors, expected):
    assert first_error_path(errors) == expected
