import pytest
from assertions import boxes_are, is_box_close, pytest_assertrepr_compare

from vesfuse.testing import make_box


params = (
    ("boxes", "other", "expected"),
    [
        ([], [], True),
        ([(0, 0, 10, 10)], [(0, 0, 10, 10)], True),
        ([(0, 0, 10, 10)], [(0, 0, 10, 10 + 1e-9)], True),
        ([(0, 0, 10, 10)], [(0, 0, 10, 10.1)], False),
        ([(0, 0, 10, 10)], [], False),
        ([(0, 0, 10, 10), (5, 5, 6, 6)], [(5, 5, 6, 6), (0, 0, 10, 10)], False),
        ([make_box(1, 2, 3, 4)], [(1, 2, 4, 6)], True),
    ],
)


@pytest.mark.parametrize(*params)
def test_boxes_are(boxes, other, expected):

    if expected is True:
        assert boxes_are(boxes) == other
        assert not boxes_are(boxes) != other
    else:
        assert not boxes_are(boxes) == other
        assert boxes_are(boxes) != other


def test_tolerance():
    assert boxes_are([(0, 0, 10, 10)], tolerance=0.5) == [(0.4, 0, 10, 10)]
    assert is_box_close((0, 0, 1), (0, 0, 1))
    assert not is_box_close((0, 0, 1), (0, 0, 1, 1))


def test_assertrepr_compare():
    left = boxes_are([(0, 0, 1, 1)])

    lines = pytest_assertrepr_compare(None, "==", left, [(0, 0, 2, 2)])

    assert lines == ["[(0, 0, 1, 1)] == [(0, 0, 2, 2)] (tolerance 1e-06)"]
    assert pytest_assertrepr_compare(None, "<", left, []) is None
