"""
    vesfuse.engine
    ~~~~~~~~~~~~~~

    Asynchronous trajectory matching and the per-second fusion tick.

    Each tick the AIS and visual trajectories are compared through a gated
    similarity matrix, the matrix is solved as an assignment problem and
    the resulting pairs are counted. Pairs matched more than ``MAT_MIN``
    times become associations, which are then carried to the next tick
    without any similarity evaluation and feed the occlusion predictor of
    the tracker.
"""

import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Tuple

import numpy as np

from vesfuse.ais import AisStore, clean, pixel_trajectories, update_store
from vesfuse.assignment import solve
from vesfuse.exc import RejectedTickError
from vesfuse.model import FusedAnnotation
from vesfuse.similarity import PixelSeries, similarity_for
from vesfuse.tracking import Tracker
from vesfuse.utility import finite

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchCount:
    z: int
    last_match_time: float


@dataclass
class FusionState:
    """Everything carried from one tick to the next."""

    store: AisStore
    tracker: Tracker
    #: ``(mmsi, track_id) -> MatchCount``.
    counts: Dict[Tuple[int, int], MatchCount] = field(default_factory=dict)
    #: Bound ``(mmsi, track_id)`` pairs.
    associations: FrozenSet[Tuple[int, int]] = frozenset()
    t: float = None

    @classmethod
    def initial(cls, config):
        return cls(store=AisStore(retention=config.RETENTION), tracker=Tracker(config))


def build_similarity_matrix(t_ais, tracks, b_last, d_max, similarity):
    """Builds the ``I x J`` cost matrix between AIS trajectories (rows, by
    ascending MMSI) and visual tracks (columns, by ascending id).

    Pairs whose newest points are farther apart than ``d_max`` pixels are
    forbidden. Otherwise a bound pair is forced, any other pair sharing its
    row or column is forbidden, and the remaining cells hold
    ``similarity(X, Y)``.

    :returns: ``(costs, mmsis, track_ids)``.
    """

    mmsis = sorted(t_ais)
    tracks = sorted(tracks, key=lambda track: track.id)
    track_ids = [track.id for track in tracks]

    bound_mmsis = {mmsi for mmsi, _ in b_last}
    bound_tracks = {track_id for _, track_id in b_last}

    costs = np.full((len(mmsis), len(tracks)), np.inf)
    series = {}
    evaluated = 0

    for i, mmsi in enumerate(mmsis):
        traj = t_ais[mmsi]

        for j, track in enumerate(tracks):
            if not track.history:
                continue

            if traj.last_point.distance(track.history[-1][1]) > d_max:
                continue

            if mmsi in bound_mmsis or track.id in bound_tracks:
                if (mmsi, track.id) in b_last:
                    costs[i, j] = -np.inf
                continue

            if mmsi not in series:
                series[mmsi] = PixelSeries.from_pairs(traj.points)

            history = PixelSeries.from_pairs(track.history)
            costs[i, j] = similarity(series[mmsi], history)
            evaluated += 1

    logger.debug(
        "Similarity matrix %dx%d, %d cells evaluated",
        len(mmsis),
        len(tracks),
        evaluated,
    )

    return costs, mmsis, track_ids


def update_counts(m_last, o_res, now, t_max):
    """Increments the count of every matched pair (new pairs start at 1) and
    carries unmatched pairs whose last match is less than ``t_max`` seconds
    old."""

    counts = {}
    matched = set(o_res)

    for pair in sorted(matched):
        previous = m_last.get(pair)
        counts[pair] = MatchCount(previous.z + 1 if previous else 1, now)

    for pair, count in sorted(m_last.items()):
        if pair not in matched and now - count.last_match_time < t_max:
            counts[pair] = count

    return counts


def promote_associations(counts, mat_min):
    """Pairs counted more than ``mat_min`` times, kept one-to-one: higher
    counts first, ties broken by the lower MMSI."""

    candidates = sorted(
        (pair for pair, count in counts.items() if count.z > mat_min),
        key=lambda pair: (-counts[pair].z, pair),
    )
    used_mmsis, used_tracks = set(), set()
    associations = set()

    for mmsi, track_id in candidates:
        if mmsi in used_mmsis or track_id in used_tracks:
            continue

        associations.add((mmsi, track_id))
        used_mmsis.add(mmsi)
        used_tracks.add(track_id)

    return frozenset(associations)


def _live_pairs(pairs, mmsis, track_ids):
    return frozenset((m, v) for m, v in pairs if m in mmsis and v in track_ids)


def _check_batches(t, ais_batch, detection_batch, state):
    if state.t is not None and t <= state.t:
        raise RejectedTickError(f"Tick {t} is not after {state.t}")

    for det in detection_batch:
        if det.t != t:
            raise RejectedTickError(f"Detection at {det.t} given to tick {t}")

    for record in ais_batch:
        if finite(record.t) and not t - 1 < record.t <= t:
            raise RejectedTickError(f"AIS record at {record.t} outside tick {t}")


def annotate(t, tracks, associations, o_res, t_ais):
    """Fused annotations of the confirmed tracks updated at ``t``."""

    bound = {track_id: mmsi for mmsi, track_id in associations}
    matched = {track_id: mmsi for mmsi, track_id in o_res}
    annotations = []

    for track in sorted(tracks, key=lambda track: track.id):
        if not track.is_confirmed or not track.updated:
            continue

        if track.id in bound:
            mmsi, provenance = bound[track.id], "associated"
        elif track.id in matched:
            mmsi, provenance = matched[track.id], "matched"
        else:
            mmsi, provenance = None, "unmatched"

        ais = t_ais[mmsi].latest.snapshot() if mmsi in t_ais else None
        annotations.append(
            FusedAnnotation(
                t=t,
                track=track.id,
                box=track.last_box.tlbr,
                provenance=provenance,
                mmsi=mmsi,
                ais=ais,
                predicted=track.last_box.predicted,
            )
        )

    return annotations


def fuse_tick(ais_batch, detection_batch, state, config, t, similarity=None):
    """Runs one fusion tick at time ``t``.

    :param ais_batch: Raw :class:`~vesfuse.model.AisRecord` received in
                      ``(t - 1, t]``.
    :param detection_batch: The :class:`~vesfuse.model.DetectionBox` list
                            stamped ``t``.
    :param state: The :class:`FusionState`, advanced in place.
    :param similarity: Similarity operator; defaults to the configured one.
    :returns: ``(annotations, state)``.
    :raises RejectedTickError: On out-of-order input. The state is left
                               untouched.
    """

    _check_batches(t, ais_batch, detection_batch, state)

    if similarity is None:
        similarity = similarity_for(config)

    cam = config.CAMERA
    limits = {"region_radius": config.REGION_RADIUS, "max_sog": config.MAX_SOG}
    fresh = clean(ais_batch, cam, now=t, **limits)
    update_store(state.store, fresh, t, cam, **limits)
    t_ais = pixel_trajectories(state.store, cam)

    live_ids = {track.id for track in state.tracker.tracks}
    b_last = _live_pairs(state.associations, t_ais, live_ids)

    tracks, _, _ = state.tracker.track_step(t, detection_batch, t_ais, b_last)
    confirmed = [track for track in tracks if track.is_confirmed]
    b_last = _live_pairs(b_last, t_ais, {track.id for track in confirmed})

    costs, mmsis, track_ids = build_similarity_matrix(
        t_ais, confirmed, b_last, config.max_matching_distance, similarity
    )
    o_res = [(mmsis[i], track_ids[j]) for i, j in solve(costs)]

    state.counts = update_counts(state.counts, o_res, t, config.T_MAX)
    associations = _live_pairs(
        promote_associations(state.counts, config.MAT_MIN),
        t_ais,
        {track.id for track in tracks},
    )

    for mmsi, track_id in sorted(associations - state.associations):
        logger.info("Associated MMSI %s with track %s at %s", mmsi, track_id, t)

    for mmsi, track_id in sorted(state.associations - associations):
        # A dissolved pair has to be counted up again from scratch.
        state.counts.pop((mmsi, track_id), None)
        logger.info(
            "Dissolved association of MMSI %s and track %s at %s", mmsi, track_id, t
        )

    state.associations = associations
    state.t = t

    return annotate(t, tracks, associations, o_res, t_ais), state


class FusionEngine:
    """Drives :func:`fuse_tick` over a stream of one-second batches.

    :param config: A :class:`~vesfuse.config.Config`.
    :param similarity: Optional similarity operator overriding the
                       configured one.
    """

    def __init__(self, config, similarity=None):
        self.config = config
        self.similarity = similarity or similarity_for(config)
        self.state = FusionState.initial(config)

    def tick(self, t, ais_batch=(), detection_batch=()):
        annotations, self.state = fuse_tick(
            list(ais_batch),
            list(detection_batch),
            self.state,
            self.config,
            t,
            self.similarity,
        )
        return annotations

    @property
    def associations(self):
        return self.state.associations


def tick_range(ais_records, detection_ticks):
    """Every integer second from the first to the last input time. An AIS
    record received at ``r`` belongs to the tick ``ceil(r)``."""

    times = [r.t for r in ais_records if finite(r.t)] + [t for t, _ in detection_ticks]

    if not times:
        return range(0)

    return range(math.ceil(min(times)), math.ceil(max(times)) + 1)


def replay(
    ais_records, detection_ticks, config, similarity=None, clock=time.perf_counter
):
    """Replays recorded inputs one second at a time.

    :param ais_records: AIS records sorted by reception time.
    :param detection_ticks: ``(t, boxes)`` pairs with integer ``t``.
    :returns: ``(annotations, durations)``, the wall-clock duration of every
              tick in seconds.
    """

    ais_by_tick = defaultdict(list)

    for record in ais_records:
        if finite(record.t):
            ais_by_tick[math.ceil(record.t)].append(record)
        else:
            logger.debug("Skipped AIS record of %s without a valid time", record.mmsi)

    for t, _ in detection_ticks:
        if t != math.ceil(t):
            raise RejectedTickError(f"Detections at {t} are not on a whole second")

    detections_by_tick = dict(detection_ticks)
    engine = FusionEngine(config, similarity)
    annotations, durations = [], []

    for t in tick_range(ais_records, detection_ticks):
        batch = detections_by_tick.get(t, [])
        start = clock()
        annotations.extend(engine.tick(t, ais_by_tick.get(t, []), batch))
        durations.append(clock() - start)

    return annotations, durations
