"""
    vesfuse.simulator
    ~~~~~~~~~~~~~~~~~

    Seeded generator of synthetic scenes: vessel kinematics integrated once
    per second on the ellipsoid, ground truth boxes from projected hull
    corners, asynchronous and noisy AIS reports, and detections with
    jitter, misses, occlusion and synthetic appearance embeddings.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import yaml

from vesfuse.ais import KNOT
from vesfuse.config import CAMERA_SCHEMA, camera_from_mapping, default_camera
from vesfuse.exc import (
    InputFormatError,
    InvalidArgumentError,
    OutOfDomainError,
    ValidationError,
)
from vesfuse.geo import (
    forward_geodetic,
    geo_to_pixel,
    inverse_geodetic,
    inverse_mercator,
)
from vesfuse.model import (
    AisRecord,
    CameraModel,
    DetectionBox,
    GeoPoint,
    GroundTruthRecord,
    ModelMixin,
    intersection_area,
)
from vesfuse.utility import Validator

logger = logging.getLogger(__name__)

#: Independent random streams, one per artifact.
AIS_STREAM = 0
DETECTION_STREAM = 1
EMBEDDING_STREAM = 2

DEFAULT_T0 = 1700000000


@dataclass(frozen=True)
class Leg(ModelMixin):
    """Constant speed (knots) and course (degrees) from ``t`` seconds after
    the start of the scene."""

    t: float
    speed: float
    course: float


@dataclass(frozen=True)
class VesselSpec(ModelMixin):
    mmsi: int
    start: GeoPoint
    schedule: Tuple[Leg, ...]
    length: float = 40.0
    beam: float = 8.0
    air_draft: float = 12.0
    has_ais: bool = True
    #: ``(start, end)`` offsets in seconds during which no AIS is sent.
    ais_silences: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.schedule:
            raise InvalidArgumentError("A vessel needs at least one leg")

        times = [leg.t for leg in self.schedule]

        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidArgumentError("Schedule times must be increasing")

        if any(leg.speed < 0 for leg in self.schedule):
            raise InvalidArgumentError("Speeds must be non-negative")

    def leg_at(self, offset):
        current = self.schedule[0]

        for leg in self.schedule:
            if leg.t <= offset:
                current = leg

        return current

    def silent_at(self, offset):
        return any(start <= offset < end for start, end in self.ais_silences)


@dataclass(frozen=True)
class NoiseModel(ModelMixin):
    ais_interval: Tuple[int, int] = (2, 10)
    ais_latency: float = 0.0
    ais_dropout: float = 0.0
    gps_sigma: float = 0.0
    box_jitter_sigma: float = 1.0
    miss_rate: float = 0.0
    embedding_dim: int = 128
    embedding_noise_sigma: float = 0.02
    occlusion_embedding_corruption: float = 0.5
    #: Overlap ratio above which the farther of two vessels is not detected.
    visibility_threshold: float = 0.3

    def __post_init__(self):
        for name in ("ais_dropout", "miss_rate", "occlusion_embedding_corruption"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidArgumentError(f"{name} must be a probability")

        sigmas = ("gps_sigma", "box_jitter_sigma", "embedding_noise_sigma")

        for name in sigmas + ("ais_latency",):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative")

        low, high = self.ais_interval

        if not 0 < low <= high:
            raise InvalidArgumentError("Invalid AIS interval")


@dataclass(frozen=True, eq=False)
class Scenario(ModelMixin):
    name: str
    vessels: Tuple[VesselSpec, ...]
    camera: CameraModel = field(default_factory=default_camera)
    duration: int = 120
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    t0: int = DEFAULT_T0

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidArgumentError("Duration must be positive")

    def with_seed(self, seed):
        return Scenario(
            name=self.name,
            vessels=self.vessels,
            camera=self.camera,
            duration=self.duration,
            noise=self.noise,
            seed=seed,
            t0=self.t0,
        )

    def rng(self, stream):
        return np.random.default_rng([self.seed, stream])


@dataclass(frozen=True)
class VesselState:
    offset: int
    pos: GeoPoint
    speed: float
    course: float


def trajectory(vessel, duration):
    """Per-second kinematic states from offset 0 to ``duration``."""

    states = []
    pos = vessel.start

    for offset in range(int(duration) + 1):
        leg = vessel.leg_at(offset)
        states.append(VesselState(offset, pos, leg.speed, leg.course % 360.0))
        pos = forward_geodetic(pos, leg.course, leg.speed * KNOT)

    return states


def hull_corners(state, vessel):
    """Footprint corners of the hull: bow and stern on the course line,
    each moved half the beam to port and starboard."""

    bow = forward_geodetic(state.pos, state.course, vessel.length / 2.0)
    stern = forward_geodetic(state.pos, state.course + 180.0, vessel.length / 2.0)
    corners = []

    for end in (bow, stern):
        for side in (-90.0, 90.0):
            azimuth = state.course + side
            corners.append(forward_geodetic(end, azimuth, vessel.beam / 2.0))

    return corners


def project_hull(state, vessel, cam):
    """Axis-aligned pixel envelope of the hull at the water line and at the
    air draft, clipped to the image, or ``None`` when not in view."""

    xs, ys = [], []

    try:
        for corner in hull_corners(state, vessel):
            for altitude in (0.0, vessel.air_draft):
                p = geo_to_pixel(corner, cam, altitude)
                xs.append(p.x)
                ys.append(p.y)
    except OutOfDomainError:
        return None

    box = (
        max(min(xs), 0.0),
        max(min(ys), 0.0),
        min(max(xs), float(cam.image_width)),
        min(max(ys), float(cam.image_height)),
    )

    if not (box[0] < box[2] and box[1] < box[3]):
        return None

    cx, cy = (min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0

    if not (0 <= cx < cam.image_width and 0 <= cy < cam.image_height):
        return None

    return box


def _overlap_ratio(a, b):
    inter = intersection_area(a, b)

    if inter == 0:
        return 0.0

    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / min(area_a, area_b)


@dataclass
class _Frame:
    """Boxes, ranges and occluders of every vessel at one second."""

    boxes: dict
    ranges: dict
    #: vessel index -> (occluder index, overlap ratio) of the nearest
    #: vessel overlapping it with the largest ratio.
    occluders: dict


def _frames(scenario):
    cam = scenario.camera
    states = [trajectory(v, scenario.duration) for v in scenario.vessels]
    frames = []

    for offset in range(scenario.duration + 1):
        boxes, ranges, occluders = {}, {}, {}

        for k, vessel in enumerate(scenario.vessels):
            state = states[k][offset]
            box = project_hull(state, vessel, cam)
            ranges[k] = inverse_geodetic(cam.camera_geo, state.pos)[0]

            if box is not None:
                boxes[k] = box

        for k in boxes:
            for other in boxes:
                if other == k or ranges[other] >= ranges[k]:
                    continue

                ratio = _overlap_ratio(boxes[k], boxes[other])

                if ratio > 0 and ratio > occluders.get(k, (None, 0.0))[1]:
                    occluders[k] = (other, ratio)

        frames.append(_Frame(boxes, ranges, occluders))

    return states, frames


def ground_truth(scenario):
    """Ground truth of every vessel at every second, out-of-view seconds
    included with ``in_view=False``."""

    _, frames = _frames(scenario)
    records = []

    for offset, frame in enumerate(frames):
        for k, vessel in enumerate(scenario.vessels):
            box = frame.boxes.get(k)
            records.append(
                GroundTruthRecord(
                    t=scenario.t0 + offset,
                    mmsi=vessel.mmsi if vessel.has_ais else 0,
                    track_id=k + 1,
                    box=box if box is not None else (0.0, 0.0, 0.0, 0.0),
                    in_view=box is not None,
                    occlusion=frame.occluders.get(k, (None, 0.0))[1],
                )
            )

    return records


def _gps_noise(rng, pos, sigma):
    east, north = rng.normal(0.0, sigma, 2)
    distance = math.hypot(east, north)

    if distance == 0:
        return pos

    return forward_geodetic(pos, math.degrees(math.atan2(east, north)), distance)


def emit_ais(scenario):
    """AIS reports of every vessel with AIS, sorted by time and MMSI.

    Report offsets accumulate integer gaps drawn uniformly from the noise
    model's interval and stop at the scene duration. Each report is stamped
    with its source time plus the latency.
    """

    noise = scenario.noise
    rng = scenario.rng(AIS_STREAM)
    low, high = noise.ais_interval
    records = []

    for vessel in scenario.vessels:
        states = trajectory(vessel, scenario.duration)
        offset = 0

        while True:
            offset += int(rng.integers(low, high + 1))

            if offset > scenario.duration:
                break

            dropped = rng.random() < noise.ais_dropout
            noisy = _gps_noise(rng, states[offset].pos, noise.gps_sigma)

            if not vessel.has_ais or dropped or vessel.silent_at(offset):
                continue

            state = states[offset]
            records.append(
                AisRecord(
                    mmsi=vessel.mmsi,
                    t=scenario.t0 + offset + noise.ais_latency,
                    pos=noisy,
                    sog=state.speed,
                    cog=state.course,
                    heading=state.course,
                )
            )

    return sorted(records, key=lambda r: (r.t, r.mmsi))


def _unit(v):
    return v / np.linalg.norm(v)


def _jittered(rng, box, sigma):
    if sigma > 0:
        box = tuple(np.asarray(box) + rng.normal(0.0, sigma, 4))

    x_tl, y_tl, x_br, y_br = (float(v) for v in box)
    x_tl, x_br = min(x_tl, x_br - 1.0), max(x_br, x_tl + 1.0)
    y_tl, y_br = min(y_tl, y_br - 1.0), max(y_br, y_tl + 1.0)
    return x_tl, y_tl, x_br, y_br


def emit_detections(scenario):
    """Detections per second as ``(t, boxes)`` pairs, one per second of the
    scene, empty seconds included.

    A vessel overlapped by a nearer one beyond the visibility threshold is
    not detected; while any nearer vessel overlaps it its embedding is
    pulled toward the occluder's.
    """

    noise = scenario.noise
    rng = scenario.rng(DETECTION_STREAM)
    emb_rng = scenario.rng(EMBEDDING_STREAM)
    dim = noise.embedding_dim
    identities = [_unit(emb_rng.normal(size=dim)) for _ in scenario.vessels]

    _, frames = _frames(scenario)
    ticks = []

    for offset, frame in enumerate(frames):
        t = scenario.t0 + offset
        boxes = []

        for k in sorted(frame.boxes):
            missed = rng.random() < noise.miss_rate
            jitter = _jittered(rng, frame.boxes[k], noise.box_jitter_sigma)
            sigma = noise.embedding_noise_sigma
            embedding = identities[k] + rng.normal(0.0, sigma, dim)
            occluder, ratio = frame.occluders.get(k, (None, 0.0))

            if missed or ratio > noise.visibility_threshold:
                continue

            if occluder is not None:
                c = noise.occlusion_embedding_corruption
                embedding = (1 - c) * embedding + c * identities[occluder]

            x_tl, y_tl, x_br, y_br = jitter
            boxes.append(
                DetectionBox(
                    t=t,
                    x_tl=x_tl,
                    y_tl=y_tl,
                    x_br=x_br,
                    y_br=y_br,
                    confidence=1.0,
                    embedding=_unit(embedding),
                )
            )

        ticks.append((t, boxes))

    return ticks


def at_offset(cam, east, north):
    """Geodetic position ``east`` and ``north`` metres from the camera."""
    return inverse_mercator(east, north, cam.camera_geo)


def knots(metres_per_second):
    return metres_per_second / KNOT


def _vessel(cam, mmsi, east, north, speed, course, **kwargs):
    return VesselSpec(
        mmsi=mmsi,
        start=at_offset(cam, east, north),
        schedule=(Leg(0, knots(speed), course),),
        **kwargs,
    )


def single(seed=0):
    cam = default_camera()
    return Scenario(
        name="single",
        vessels=(_vessel(cam, 413000001, -100.0, 600.0, 3.0, 90.0),),
        camera=cam,
        seed=seed,
    )


def crossing(seed=0):
    """A near eastbound and a far westbound vessel whose boxes overlap from 43 s
    to 52 s into the scene, most of all around 47 s."""

    cam = default_camera()
    return Scenario(
        name="crossing",
        vessels=(
            _vessel(cam, 413000001, -184.0, 600.0, 4.0, 90.0),
            _vessel(cam, 413000002, 276.0, 900.0, 4.0, 270.0),
        ),
        camera=cam,
        noise=NoiseModel(gps_sigma=2.0),
        seed=seed,
    )


def overtaking(seed=0):
    cam = default_camera()
    return Scenario(
        name="overtaking",
        vessels=(
            _vessel(cam, 413000001, -200.0, 700.0, 5.0, 90.0),
            _vessel(cam, 413000002, -120.0, 750.0, 3.0, 90.0),
        ),
        camera=cam,
        noise=NoiseModel(gps_sigma=2.0),
        seed=seed,
    )


def mixed(seed=0):
    """Five vessels, one without AIS, with two crossings."""

    cam = default_camera()
    return Scenario(
        name="mixed",
        vessels=(
            _vessel(cam, 413000001, -150.0, 500.0, 3.0, 90.0),
            _vessel(cam, 413000002, 260.0, 800.0, 4.0, 270.0),
            _vessel(cam, 413000003, -400.0, 1200.0, 5.0, 90.0, has_ais=False),
            _vessel(cam, 413000004, 120.0, 650.0, 0.0, 0.0),
            _vessel(cam, 413000005, -250.0, 1000.0, 2.0, 0.0),
        ),
        camera=cam,
        noise=NoiseModel(gps_sigma=2.0, ais_latency=1.0),
        seed=seed,
    )


def ais_gap(seed=0):
    """A vessel whose AIS goes silent for longer than the retention window."""

    cam = default_camera()
    return Scenario(
        name="ais_gap",
        vessels=(
            _vessel(
                cam,
                413000001,
                -150.0,
                600.0,
                1.0,
                90.0,
                ais_silences=((60.0, 190.0),),
            ),
        ),
        camera=cam,
        duration=300,
        seed=seed,
    )


def busy(seed=0):
    """Ten vessels spread over the field of view."""

    cam = default_camera()
    vessels = []

    for k in range(10):
        north = 500.0 + 90.0 * k
        east = (-0.3 if k % 2 == 0 else 0.3) * north
        course = 90.0 if k % 2 == 0 else 270.0
        vessels.append(_vessel(cam, 413000001 + k, east, north, 2.0 + 0.3 * k, course))

    return Scenario(name="busy", vessels=tuple(vessels), camera=cam, seed=seed)


LIBRARY = {
    "single": single,
    "crossing": crossing,
    "overtaking": overtaking,
    "mixed": mixed,
    "ais_gap": ais_gap,
    "busy": busy,
}


_leg_schema = {
    "type": "dict",
    "schema": {
        "t": {"type": "number", "min": 0, "required": True},
        "speed": {"type": "number", "min": 0, "required": True},
        "course": {"type": "number", "min": 0, "max": 360, "required": True},
    },
}

_position_schema = {
    "type": "dict",
    "schema": {
        "lon": {"type": "number", "min": -180, "max": 180, "dependencies": "lat"},
        "lat": {"type": "number", "min": -85, "max": 85, "dependencies": "lon"},
        "east": {"type": "number", "dependencies": "north", "excludes": ["lon", "lat"]},
        "north": {"type": "number", "dependencies": "east", "excludes": ["lon", "lat"]},
    },
}

_vessel_schema = {
    "type": "dict",
    "schema": {
        "mmsi": {
            "type": "integer",
            "min": 100000000,
            "max": 999999999,
            "required": True,
        },
        "start": dict(_position_schema, required=True),
        "schedule": {
            "type": "list",
            "schema": _leg_schema,
            "minlength": 1,
            "increasing": True,
            "required": True,
        },
        "length": {"type": "number", "min": 0, "forbidden": [0]},
        "beam": {"type": "number", "min": 0, "forbidden": [0]},
        "air_draft": {"type": "number", "min": 0},
        "has_ais": {"type": "boolean"},
        "ais_silences": {
            "type": "list",
            "schema": {
                "type": "list",
                "items": [{"type": "number"}, {"type": "number"}],
            },
        },
    },
}

SCENARIO_SCHEMA = {
    "name": {"type": "string", "empty": False},
    "duration": {"type": "integer", "min": 0, "forbidden": [0], "required": True},
    "seed": {"type": "integer", "min": 0},
    "t0": {"type": "integer", "min": 0},
    "camera": {"type": "dict", "schema": CAMERA_SCHEMA},
    "noise": {
        "type": "dict",
        "schema": {
            "ais_interval": {
                "type": "list",
                "items": [{"type": "integer", "min": 1}, {"type": "integer", "min": 1}],
            },
            "ais_latency": {"type": "number", "min": 0},
            "ais_dropout": {"type": "number", "min": 0, "max": 1},
            "gps_sigma": {"type": "number", "min": 0},
            "box_jitter_sigma": {"type": "number", "min": 0},
            "miss_rate": {"type": "number", "min": 0, "max": 1},
            "embedding_dim": {"type": "integer", "min": 1},
            "embedding_noise_sigma": {"type": "number", "min": 0},
            "occlusion_embedding_corruption": {"type": "number", "min": 0, "max": 1},
            "visibility_threshold": {"type": "number", "min": 0, "max": 1},
        },
    },
    "vessels": {
        "type": "list",
        "schema": _vessel_schema,
        "minlength": 1,
        "required": True,
    },
}


def scenario_from_mapping(data, seed=None):
    """Builds a :class:`Scenario` from a scenario document. Invalid documents
    raise :class:`~vesfuse.exc.ValidationError`."""

    v = Validator(SCENARIO_SCHEMA)

    if v.validate(data or {}) is False:
        raise ValidationError(v.errors)

    data = v.document
    cam = camera_from_mapping(data["camera"]) if "camera" in data else default_camera()
    vessels = []

    for item in data["vessels"]:
        start = item["start"]

        if "east" in start:
            pos = at_offset(cam, start["east"], start["north"])
        elif "lon" in start:
            pos = GeoPoint(start["lon"], start["lat"])
        else:
            raise ValidationError({"vessels": ["start needs lon/lat or east/north"]})

        vessels.append(
            VesselSpec(
                mmsi=item["mmsi"],
                start=pos,
                schedule=tuple(
                    Leg(leg["t"], leg["speed"], leg["course"])
                    for leg in item["schedule"]
                ),
                length=item.get("length", 40.0),
                beam=item.get("beam", 8.0),
                air_draft=item.get("air_draft", 12.0),
                has_ais=item.get("has_ais", True),
                ais_silences=tuple(tuple(w) for w in item.get("ais_silences", ())),
            )
        )

    noise = dict(data.get("noise", {}))

    if "ais_interval" in noise:
        noise["ais_interval"] = tuple(noise["ais_interval"])

    return Scenario(
        name=data.get("name", "scenario"),
        vessels=tuple(vessels),
        camera=cam,
        duration=data["duration"],
        noise=NoiseModel(**noise),
        seed=data.get("seed", 0) if seed is None else seed,
        t0=data.get("t0", DEFAULT_T0),
    )


def scenario_from_file(path, seed=None):
    """Loads a YAML scenario document, see :func:`scenario_from_mapping`."""

    with open(path) as stream:
        try:
            data = yaml.safe_load(stream)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise InputFormatError(str(e), source=path, line=line)

    if not isinstance(data, dict):
        raise InputFormatError("Expected a mapping", source=path, line=1)

    return scenario_from_mapping(data, seed)


def load_scenario(name_or_path, seed=None):
    """A library scenario by name or a scenario document by path."""

    if name_or_path in LIBRARY:
        return LIBRARY[name_or_path](seed or 0)

    return scenario_from_file(name_or_path, seed)
