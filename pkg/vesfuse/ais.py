"""
    vesfuse.ais
    ~~~~~~~~~~~

    AIS trajectory extraction: cleaning of decoded reports, dead reckoning
    of silent vessels once per tick, the retention-bounded store and the
    projection of stored trajectories to pixel space.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

from vesfuse.exc import InvalidArgumentError, OutOfDomainError
from vesfuse.geo import forward_geodetic, geo_to_pixel, inverse_geodetic
from vesfuse.model import (
    HEADING_UNAVAILABLE,
    AisRecord,
    GeoPoint,
    ModelMixin,
    PixelPoint,
)
from vesfuse.utility import finite

logger = logging.getLogger(__name__)

#: One knot in metres per second.
KNOT = 1852.0 / 3600.0

MMSI_MIN = 100000000
MMSI_MAX = 999999999


def is_valid(record, max_sog=50.0):
    """True when every field of ``record`` is present and plausible."""

    mmsi = record.mmsi

    if mmsi is None or isinstance(mmsi, (bool, str)) or not finite(mmsi):
        return False

    if int(mmsi) != mmsi:
        return False

    if not MMSI_MIN <= mmsi <= MMSI_MAX:
        return False

    if not finite(record.t) or not isinstance(record.pos, GeoPoint):
        return False

    if not finite(record.sog, record.cog) or not 0 <= record.sog < max_sog:
        return False

    if not 0 <= record.cog < 360:
        return False

    heading = record.heading

    if not finite(heading):
        return False

    return heading == HEADING_UNAVAILABLE or 0 <= heading < 360


def in_region(record, cam, radius):
    distance, _ = inverse_geodetic(cam.camera_geo, record.pos)
    return distance <= radius


def clean(records, cam, now=None, region_radius=3704.0, max_sog=50.0):
    """Drops invalid reports, reports farther than ``region_radius`` metres
    from the camera and repeated ``(mmsi, t)`` pairs (the first one wins).
    Reports timestamped after ``now`` are dropped when ``now`` is given.

    The input order is preserved, so ``clean`` is idempotent.
    """

    seen = set()
    kept = []

    for record in records:
        if not is_valid(record, max_sog):
            logger.debug("Dropped invalid AIS record %s", record)
            continue

        if now is not None and record.t > now:
            logger.debug("Dropped AIS record from the future %s", record)
            continue

        if not in_region(record, cam, region_radius):
            logger.debug("Dropped AIS record outside the region %s", record)
            continue

        key = (record.mmsi, record.t)

        if key in seen:
            logger.debug("Dropped duplicate AIS record %s", record)
            continue

        seen.add(key)
        kept.append(record)

    return kept


def dead_reckon(last, t_target):
    """Predicts the report of ``last``'s vessel at ``t_target`` by travelling
    ``sog * (t_target - last.t)`` along its course."""

    dt = t_target - last.t

    if not dt > 0:
        raise InvalidArgumentError(f"Prediction time {t_target} not after {last.t}")

    pos = forward_geodetic(last.pos, last.cog, last.sog * KNOT * dt)
    return replace(last, t=t_target, pos=pos, synthetic=True)


@dataclass
class AisStore:
    """Per-vessel AIS history, real and predicted, bounded by ``retention``
    seconds."""

    retention: float = 120.0
    #: Time-ordered records per MMSI.
    trajectories: Dict[int, List[AisRecord]] = field(default_factory=dict)
    #: The last real (not predicted) record per MMSI.
    last_received: Dict[int, AisRecord] = field(default_factory=dict)

    def __len__(self):
        return len(self.trajectories)

    def __contains__(self, mmsi):
        return mmsi in self.trajectories

    def latest(self, mmsi):
        return self.trajectories[mmsi][-1]

    def copy(self):
        return AisStore(
            retention=self.retention,
            trajectories={k: list(v) for k, v in self.trajectories.items()},
            last_received=dict(self.last_received),
        )


def update_store(store, fresh, now, cam, region_radius=3704.0, max_sog=50.0):
    """Advances ``store`` to tick ``now``.

    ``fresh`` are the cleaned reports received during the tick. Every known
    vessel without a report gets a dead reckoned point at ``now``;
    predictions failing the cleaning rules are not stored. Points older
    than the retention window are pruned and vessels silent for longer than
    the window are evicted. The store is updated in place and returned.
    """

    reported = set()

    for record in sorted(fresh, key=lambda r: (r.t, r.mmsi)):
        points = store.trajectories.setdefault(record.mmsi, [])

        if points and record.t <= points[-1].t:
            logger.debug("Dropped stale AIS record %s", record)
            continue

        points.append(record)
        store.last_received[record.mmsi] = record
        reported.add(record.mmsi)

    for mmsi in sorted(store.trajectories):
        if mmsi in reported:
            continue

        last = store.last_received[mmsi]
        points = store.trajectories[mmsi]

        if now <= points[-1].t:
            continue

        try:
            predicted = dead_reckon(last, now)
        except OutOfDomainError:
            continue

        if clean([predicted], cam, region_radius=region_radius, max_sog=max_sog):
            points.append(predicted)
        else:
            logger.debug("Dropped prediction for %s outside the region", mmsi)

    for mmsi in sorted(store.trajectories):
        if now - store.last_received[mmsi].t > store.retention:
            logger.info("Evicted silent vessel %s", mmsi)
            del store.trajectories[mmsi]
            del store.last_received[mmsi]
            continue

        points = store.trajectories[mmsi]
        store.trajectories[mmsi] = [r for r in points if now - r.t <= store.retention]

        if not store.trajectories[mmsi]:
            del store.trajectories[mmsi]
            del store.last_received[mmsi]

    return store


@dataclass(frozen=True)
class AisTrajectory(ModelMixin):
    """Pixel-space trajectory of one vessel ``X_{a_i}``."""

    mmsi: int
    points: Tuple[Tuple[float, PixelPoint], ...]
    geo_points: Tuple[Tuple[float, GeoPoint], ...]
    synthetic: Tuple[bool, ...] = ()
    latest: AisRecord = None

    def __len__(self):
        return len(self.points)

    @property
    def last_point(self):
        return self.points[-1][1]

    def pixel_at(self, t, tolerance=0.5):
        """The pixel point closest to ``t`` within ``tolerance`` seconds, or
        ``None``."""

        best = None

        for ts, p in reversed(self.points):
            gap = abs(ts - t)

            if gap <= tolerance and (best is None or gap < best[0]):
                best = (gap, p)

            if ts < t - tolerance:
                break

        return best[1] if best else None


def pixel_trajectories(store, cam):
    """Projects every stored trajectory to pixels. Points behind the camera
    or outside the Mercator domain are skipped, and trajectories with no
    projectable point are omitted. Keyed by MMSI."""

    result = {}

    for mmsi in sorted(store.trajectories):
        points, geo_points, synthetic = [], [], []

        for record in store.trajectories[mmsi]:
            try:
                pixel = geo_to_pixel(record.pos, cam)
            except OutOfDomainError:
                continue

            points.append((record.t, pixel))
            geo_points.append((record.t, record.pos))
            synthetic.append(record.synthetic)

        if points:
            result[mmsi] = AisTrajectory(
                mmsi=mmsi,
                points=tuple(points),
                geo_points=tuple(geo_points),
                synthetic=tuple(synthetic),
                latest=store.latest(mmsi),
            )

    return result
