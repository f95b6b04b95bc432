import numpy as np

from vesfuse.ais import KNOT, AisTrajectory
from vesfuse.geo import forward_geodetic, geo_to_pixel
from vesfuse.model import HEADING_UNAVAILABLE, AisRecord, DetectionBox, PixelPoint
from vesfuse.simulator import at_offset
from vesfuse.tracking import Track

MMSI = 413000001


def record(
    cam,
    t=0.0,
    east=0.0,
    north=600.0,
    mmsi=MMSI,
    sog=10.0,
    cog=90.0,
    heading=HEADING_UNAVAILABLE,
    **kwargs,
):
    """An AIS record ``east`` and ``north`` metres from the camera."""

    return AisRecord(
        mmsi=mmsi,
        t=t,
        pos=at_offset(cam, east, north),
        sog=sog,
        cog=cog,
        heading=heading,
        **kwargs,
    )


class StraightVessel:
    """A vessel sailing east at constant speed in front of the camera, with
    exact AIS reports and detection boxes whose bottom centre is the
    projected AIS position."""

    def __init__(
        self, cam, mmsi=MMSI, east=-100.0, north=600.0, speed=2.0, embedding=None
    ):
        self.cam = cam
        self.mmsi = mmsi
        self.start = at_offset(cam, east, north)
        self.speed = speed
        self.embedding = embedding

    def position(self, offset):
        return forward_geodetic(self.start, 90.0, self.speed * offset)

    def report(self, t, offset):
        return AisRecord(
            mmsi=self.mmsi,
            t=t,
            pos=self.position(offset),
            sog=self.speed / KNOT,
            cog=90.0,
        )

    def box(self, t, offset, width=100.0, height=20.0):
        p = geo_to_pixel(self.position(offset), self.cam)
        return DetectionBox(
            t=t,
            x_tl=p.x - width / 2.0,
            y_tl=p.y - height,
            x_br=p.x + width / 2.0,
            y_br=p.y,
            embedding=self.embedding,
        )


def pixel_trajectory(mmsi, points, t0=0.0):
    """An :class:`~vesfuse.ais.AisTrajectory` through ``(x, y)`` points, one
    per second from ``t0``."""

    pairs = tuple((t0 + k, PixelPoint(x, y)) for k, (x, y) in enumerate(points))
    return AisTrajectory(mmsi=mmsi, points=pairs, geo_points=())


def make_track(track_id, points, t0=0.0, box=None, status="confirmed", embedding=None):
    """A track whose history goes through ``(x, y)`` anchor points, one per
    second from ``t0``."""

    history = [(t0 + k, PixelPoint(x, y)) for k, (x, y) in enumerate(points)]

    if box is None:
        x, y = points[-1]
        t = history[-1][0]
        box = DetectionBox(t=t, x_tl=x - 50, y_tl=y - 20, x_br=x + 50, y_br=y)

    return Track(
        id=track_id,
        mean=np.r_[box.to_xyah(), np.zeros(4)],
        covariance=np.eye(8),
        last_box=box,
        n_init=2,
        max_age=5,
        status=status,
        history=history,
        observations=list(history),
        smoothed_embedding=embedding,
    )


def unit(*values):
    v = np.asarray(values, dtype=float)
    return v / np.linalg.norm(v)
