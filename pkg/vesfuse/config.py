import os

import numpy as np
import yaml

from vesfuse.exc import InputFormatError, ValidationError
from vesfuse.geo import default_intrinsics
from vesfuse.model import CameraModel, GeoPoint
from vesfuse.utility import Validator


def _env_flag(name, default):
    value = os.getenv(name)

    if value is None:
        return default

    return value.strip().lower() not in ("0", "false", "no", "off", "")


def default_camera():
    """A 1280x720 camera 15 m above the water looking due north."""

    return CameraModel(
        intrinsics=default_intrinsics(1280, 720, 1500.0),
        extrinsics=np.hstack([np.eye(3), np.zeros((3, 1))]),
        image_width=1280,
        image_height=720,
        camera_geo=GeoPoint(114.3, 30.6),
        height=15.0,
    )


_number = {"type": "number"}
_positive = {"type": "number", "min": 0, "forbidden": [0]}

CAMERA_SCHEMA = {
    "intrinsics": {"type": "list", "matrix_shape": [3, 3]},
    "extrinsics": {"type": "list", "matrix_shape": [3, 4]},
    "image_width": {"type": "integer", "min": 1, "required": True},
    "image_height": {"type": "integer", "min": 1, "required": True},
    "lon": {"type": "number", "min": -180, "max": 180, "required": True},
    "lat": {"type": "number", "min": -85, "max": 85, "required": True},
    "height": _positive,
    "focal": _positive,
    "mercator_origin": {
        "type": "dict",
        "schema": {
            "lon": {"type": "number", "min": -180, "max": 180, "required": True},
            "lat": {"type": "number", "min": -85, "max": 85, "required": True},
        },
    },
}

CONFIG_SCHEMA = {
    "camera": {"type": "dict", "schema": CAMERA_SCHEMA},
    "region_radius": _positive,
    "retention": _positive,
    "max_sog": _positive,
    "omega": {"type": "number", "min": 0},
    "delta": _positive,
    "max_occlusion": {"type": "integer", "min": 1},
    "d_max": {"type": "number", "min": 0, "forbidden": [0], "nullable": True},
    "mat_min": {"type": "integer", "min": 0},
    "t_max": _positive,
    "fastdtw_radius": {"type": "integer", "min": 0},
    "normalize_dtw": {"type": "boolean"},
    "similarity": {"type": "string", "allowed": ["efastdtw", "fastdtw", "euclidean"]},
    "anti_occlusion": {"type": "boolean"},
    "track_lambda": {"type": "number", "min": 0, "max": 1},
    "gating_threshold": _positive,
    "max_cost": _positive,
    "max_iou_distance": {"type": "number", "min": 0, "max": 1, "forbidden": [1]},
    "n_init": {"type": "integer", "min": 1},
    "max_age": {"type": "integer", "min": 1},
    "kf_std_position": _positive,
    "kf_std_velocity": _positive,
    "kf_std_aspect": _positive,
    "track_anchor": {"type": "string", "allowed": ["bottom_center", "center"]},
    "embedding_dim": {"type": "integer", "min": 1},
    "iou_threshold": {"type": "number", "min": 0, "max": 1, "forbidden": [0]},
    "seed": {"type": "integer", "min": 0},
}


def camera_from_mapping(data):
    """Builds a :class:`~vesfuse.model.CameraModel` from a validated camera
    block. Missing intrinsics are derived from ``focal`` and the image size."""

    width, height = data["image_width"], data["image_height"]
    intrinsics = data.get("intrinsics")

    if intrinsics is None:
        intrinsics = default_intrinsics(width, height, data.get("focal", 1500.0))

    extrinsics = data.get("extrinsics") or np.hstack([np.eye(3), np.zeros((3, 1))])
    origin = data.get("mercator_origin")

    return CameraModel(
        intrinsics=np.asarray(intrinsics, dtype=float),
        extrinsics=np.asarray(extrinsics, dtype=float),
        image_width=width,
        image_height=height,
        camera_geo=GeoPoint(data["lon"], data["lat"]),
        mercator_origin=GeoPoint(origin["lon"], origin["lat"]) if origin else None,
        height=data.get("height", 15.0),
    )


class Config:
    """Engine configuration. The defaults reproduce the operating point of
    the fusion method: one processing step per second, a two nautical mile
    supervision region and a two minute retention window."""

    def __init__(self):
        # Image y grows downwards, so a point above the water sits higher in
        # the image than its footprint.
        self.CAMERA = default_camera()

        # AIS processing
        self.REGION_RADIUS = 3704.0

        self.RETENTION = 120.0

        self.MAX_SOG = 50.0

        # Anti-occlusion tracking
        self.ANTI_OCCLUSION = _env_flag("VF_ANTI_OCCLUSION", True)

        self.OMEGA = 0.0

        self.DELTA = 5.0

        self.MAX_OCCLUSION = 30

        self.TRACK_LAMBDA = 0.5

        self.GATING_THRESHOLD = 9.4877

        self.MAX_COST = 0.7

        self.MAX_IOU_DISTANCE = 0.7

        self.N_INIT = 2

        self.MAX_AGE = 5

        self.KF_STD_POSITION = 1.0 / 20

        self.KF_STD_VELOCITY = 1.0 / 20

        self.KF_STD_ASPECT = 0.1

        self.TRACK_ANCHOR = "bottom_center"

        self.EMBEDDING_DIM = 128

        # Trajectory matching
        self.D_MAX = None

        self.MAT_MIN = 15

        self.T_MAX = 15.0

        self.FASTDTW_RADIUS = 1

        self.NORMALIZE_DTW = False

        self.SIMILARITY = os.getenv("VF_SIMILARITY", "efastdtw")

        # Evaluation
        self.IOU_THRESHOLD = 0.5

        self.SEED = int(os.getenv("VF_SEED", "0"))

    @property
    def max_matching_distance(self):
        """``D_MAX`` or, when unset, half the horizontal image size."""

        if self.D_MAX is not None:
            return self.D_MAX

        return self.CAMERA.image_width / 2.0

    def update(self, **values):
        for key, value in values.items():
            name = key.upper()

            if not hasattr(self, name):
                raise AttributeError(f"Unknown configuration value {key}")

            setattr(self, name, value)

        return self

    @classmethod
    def from_mapping(cls, data):
        """Creates a configuration from a mapping with lowercase keys, like the
        ones found in a YAML configuration file. Unknown keys and invalid
        values raise :class:`~vesfuse.exc.ValidationError`."""

        data = data or {}
        v = Validator(CONFIG_SCHEMA)

        if v.validate(data) is False:
            raise ValidationError(v.errors)

        values = dict(v.document)
        config = cls()

        if "camera" in values:
            config.CAMERA = camera_from_mapping(values.pop("camera"))

        return config.update(**values)

    @classmethod
    def from_file(cls, path):
        with open(path) as stream:
            try:
                data = yaml.safe_load(stream)
            except yaml.YAMLError as e:
                mark = getattr(e, "problem_mark", None)
                line = mark.line + 1 if mark is not None else None
                raise InputFormatError(str(e), source=path, line=line)

        if data is not None and not isinstance(data, dict):
            raise InputFormatError("Expected a mapping", source=path, line=1)

        return cls.from_mapping(data)
