"""
    vesfuse.model
    ~~~~~~~~~~~~~

    Value types shared by the pipeline stages. They are immutable where the
    pipeline treats them as values and carry an ``export_data`` method to
    render them as plain python objects.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from vesfuse.exc import InvalidArgumentError, OutOfDomainError
from vesfuse.utility import export_data, finite


#: AIS true-heading value meaning "not available".
HEADING_UNAVAILABLE = 511.0


class ModelMixin:
    def export_data(self, include=(), exclude=()):
        return export_data(self, include, exclude)


@dataclass(frozen=True)
class GeoPoint(ModelMixin):
    """Geodetic position in decimal degrees on WGS-84."""

    lon: float
    lat: float

    def __post_init__(self):
        if not finite(self.lon, self.lat):
            raise InvalidArgumentError(f"Non-finite position ({self.lon}, {self.lat})")

        if not -90.0 <= self.lat <= 90.0:
            raise OutOfDomainError(f"Latitude {self.lat} outside [-90, 90]")

        lon = float(self.lon)

        if not -180.0 <= lon <= 180.0:
            lon = (lon + 180.0) % 360.0 - 180.0

        object.__setattr__(self, "lon", lon)
        object.__setattr__(self, "lat", float(self.lat))


@dataclass(frozen=True)
class WorldPoint(ModelMixin):
    """Camera-aligned world coordinates in metres: ``u`` east, ``v`` vertical
    offset of the water plane, ``w`` north (depth along the optical axis for
    the identity extrinsics)."""

    u: float
    v: float
    w: float

    def __post_init__(self):
        if not finite(self.u, self.v, self.w):
            raise InvalidArgumentError("Non-finite world point")

    def homogeneous(self):
        return np.array([self.u, self.v, self.w, 1.0])


@dataclass(frozen=True)
class PixelPoint(ModelMixin):
    x: float
    y: float

    def __post_init__(self):
        if not finite(self.x, self.y):
            raise InvalidArgumentError("Non-finite pixel point")

    def distance(self, other):
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, eq=False)
class CameraModel(ModelMixin):
    """Pinhole camera placed at ``camera_geo``, ``height`` metres above the
    water surface."""

    intrinsics: np.ndarray
    extrinsics: np.ndarray
    image_width: int
    image_height: int
    camera_geo: GeoPoint
    mercator_origin: Optional[GeoPoint] = None
    height: float = 15.0

    def __post_init__(self):
        k_in = np.asarray(self.intrinsics, dtype=float)
        k_ex = np.asarray(self.extrinsics, dtype=float)

        if k_in.shape != (3, 3) or k_ex.shape != (3, 4):
            raise InvalidArgumentError("Intrinsics must be 3x3 and extrinsics 3x4")

        if not np.all(np.isfinite(k_in)) or not np.all(np.isfinite(k_ex)):
            raise InvalidArgumentError("Camera matrices must be finite")

        if np.any(np.tril(k_in, -1) != 0) or k_in[0, 0] <= 0 or k_in[1, 1] <= 0:
            raise InvalidArgumentError(
                "Intrinsics must be upper-triangular with positive focal terms"
            )

        if self.image_width <= 0 or self.image_height <= 0:
            raise InvalidArgumentError("Image dimensions must be positive")

        object.__setattr__(self, "intrinsics", k_in)
        object.__setattr__(self, "extrinsics", k_ex)
        object.__setattr__(self, "projection", k_in @ k_ex)

        if self.mercator_origin is None:
            object.__setattr__(self, "mercator_origin", self.camera_geo)

    @property
    def diagonal(self):
        return math.hypot(self.image_width, self.image_height)

    def contains(self, point):
        return 0 <= point.x < self.image_width and 0 <= point.y < self.image_height


@dataclass(frozen=True)
class AisRecord(ModelMixin):
    """A decoded AIS position report. Raw records may carry ``None`` in any
    field; :func:`vesfuse.ais.clean` removes them."""

    mmsi: Optional[int]
    t: float
    pos: Optional[GeoPoint]
    sog: Optional[float]
    cog: Optional[float]
    heading: Optional[float] = HEADING_UNAVAILABLE
    synthetic: bool = False

    def snapshot(self):
        """The AIS fields attached to a fused annotation."""
        return {
            "lon": self.pos.lon,
            "lat": self.pos.lat,
            "sog": self.sog,
            "cog": self.cog,
            "heading": None if self.heading == HEADING_UNAVAILABLE else self.heading,
        }


@dataclass(frozen=True, eq=False)
class DetectionBox(ModelMixin):
    """Axis-aligned bounding box in pixels.

    Boxes produced by the occlusion predictor carry ``predicted=True`` and the
    identity of the track they were predicted for.
    """

    t: float
    x_tl: float
    y_tl: float
    x_br: float
    y_br: float
    confidence: float = 1.0
    embedding: Optional[np.ndarray] = field(default=None, repr=False)
    predicted: bool = False
    source_track: Optional[int] = None

    def __post_init__(self):
        if not finite(self.x_tl, self.y_tl, self.x_br, self.y_br):
            raise InvalidArgumentError("Non-finite box corner")

        if not (self.x_tl < self.x_br and self.y_tl < self.y_br):
            raise InvalidArgumentError(
                f"Invalid box ({self.x_tl}, {self.y_tl}, {self.x_br}, {self.y_br})"
            )

        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            norm = np.linalg.norm(emb)

            if emb.ndim != 1 or norm == 0 or not np.isfinite(norm):
                raise InvalidArgumentError("Embedding must be a non-zero vector")

            if abs(norm - 1.0) > 1e-6:
                emb = emb / norm

            object.__setattr__(self, "embedding", emb)

    @property
    def tlbr(self):
        return (self.x_tl, self.y_tl, self.x_br, self.y_br)

    @property
    def width(self):
        return self.x_br - self.x_tl

    @property
    def height(self):
        return self.y_br - self.y_tl

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        return PixelPoint((self.x_tl + self.x_br) / 2.0, (self.y_tl + self.y_br) / 2.0)

    def anchor(self, kind="bottom_center"):
        """Trajectory point of the box: the bottom-centre (largest row) by
        default, or the centroid."""

        if kind == "center":
            return self.center

        return PixelPoint((self.x_tl + self.x_br) / 2.0, self.y_br)

    def to_xyah(self):
        """Centre x, centre y, aspect ratio (w/h), height."""
        c = self.center
        return np.array([c.x, c.y, self.width / self.height, self.height])

    def shifted(self, dx, dy, t=None, **changes):
        return DetectionBox(
            t=self.t if t is None else t,
            x_tl=self.x_tl + dx,
            y_tl=self.y_tl + dy,
            x_br=self.x_br + dx,
            y_br=self.y_br + dy,
            confidence=changes.get("confidence", self.confidence),
            embedding=changes.get("embedding", self.embedding),
            predicted=changes.get("predicted", self.predicted),
            source_track=changes.get("source_track", self.source_track),
        )


def box_from_xyah(t, xyah):
    cx, cy, aspect, height = (float(v) for v in xyah[:4])
    width = aspect * height
    return DetectionBox(
        t=t,
        x_tl=cx - width / 2.0,
        y_tl=cy - height / 2.0,
        x_br=cx + width / 2.0,
        y_br=cy + height / 2.0,
    )


def intersection_area(a, b):
    """Overlap area of two boxes given as ``(x_tl, y_tl, x_br, y_br)``."""
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    return w * h if w > 0 and h > 0 else 0.0


def iou(a, b):
    inter = intersection_area(a, b)

    if inter == 0.0:
        return 0.0

    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


@dataclass(frozen=True)
class FusedAnnotation(ModelMixin):
    """One fused output record: a visual track, optionally labelled with the
    MMSI and AIS state of the vessel it was matched to."""

    t: float
    track: int
    box: Tuple[float, float, float, float]
    provenance: str
    mmsi: Optional[int] = None
    ais: Optional[dict] = None
    predicted: bool = False

    def __post_init__(self):
        if self.provenance not in ("matched", "associated", "unmatched"):
            raise InvalidArgumentError(f"Unknown provenance '{self.provenance}'")

        if (self.mmsi is None) != (self.provenance == "unmatched"):
            raise InvalidArgumentError("An MMSI is required unless unmatched")


@dataclass(frozen=True)
class GroundTruthRecord(ModelMixin):
    """Ground truth of one vessel at one second. ``mmsi`` is 0 for vessels
    that do not broadcast AIS."""

    t: float
    mmsi: int
    track_id: int
    box: Tuple[float, float, float, float]
    in_view: bool = True
    occlusion: float = 0.0
