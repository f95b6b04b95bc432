"""
    vesfuse.tracking
    ~~~~~~~~~~~~~~~~

    Video-based vessel trajectory extraction: a tracking-by-detection core
    (Kalman motion model, appearance embeddings, gated assignment) wrapped
    with occlusion handling. Detections inside occlusion areas are dropped,
    occluded tracks get boxes predicted from their bound AIS trajectory or
    from their own recent motion, and their appearance is frozen in a
    feature bank until they leave the occlusion.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import FrozenSet

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from vesfuse.assignment import solve
from vesfuse.exc import InvalidArgumentError
from vesfuse.kalman import KalmanFilter
from vesfuse.model import (
    DetectionBox,
    ModelMixin,
    box_from_xyah,
    intersection_area,
    iou,
)

logger = logging.getLogger(__name__)


class TrackStatus:
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"


@dataclass(frozen=True)
class OcclusionArea(ModelMixin):
    """Smallest rectangle enclosing a group of overlapping boxes."""

    x_tl: float
    y_tl: float
    x_br: float
    y_br: float
    member_track_ids: FrozenSet[int] = frozenset()

    @property
    def tlbr(self):
        return (self.x_tl, self.y_tl, self.x_br, self.y_br)

    def contains_point(self, point):
        return self.x_tl <= point.x <= self.x_br and self.y_tl <= point.y <= self.y_br

    def contains_box(self, box):
        return (
            self.x_tl <= box.x_tl
            and self.y_tl <= box.y_tl
            and box.x_br <= self.x_br
            and box.y_br <= self.y_br
        )


def occlusion_ratio(boxes):
    """Overlap of a group of boxes relative to its smallest member: the
    largest pairwise intersection divided by the smallest box area."""

    if len(boxes) < 2:
        raise InvalidArgumentError("At least two boxes are needed")

    overlap = max(
        intersection_area(a.tlbr, b.tlbr) for a, b in itertools.combinations(boxes, 2)
    )
    return overlap / min(box.area for box in boxes)


def detect_occlusion_areas(boxes, omega=0.0):
    """Groups chain-overlapping boxes and returns the enclosing rectangle of
    every group whose :func:`occlusion_ratio` exceeds ``omega``.

    Member identities are taken from each box's ``source_track``.
    """

    n = len(boxes)

    if n < 2:
        return []

    adjacency = np.zeros((n, n), dtype=bool)

    for i, j in itertools.combinations(range(n), 2):
        if intersection_area(boxes[i].tlbr, boxes[j].tlbr) > 0:
            adjacency[i, j] = adjacency[j, i] = True

    count, labels = connected_components(csr_matrix(adjacency), directed=False)
    areas = []

    for label in range(count):
        group = [boxes[i] for i in np.flatnonzero(labels == label)]

        if len(group) < 2 or not occlusion_ratio(group) > omega:
            continue

        areas.append(
            OcclusionArea(
                x_tl=min(b.x_tl for b in group),
                y_tl=min(b.y_tl for b in group),
                x_br=max(b.x_br for b in group),
                y_br=max(b.y_br for b in group),
                member_track_ids=frozenset(
                    b.source_track for b in group if b.source_track is not None
                ),
            )
        )

    return areas


def in_any_area(box, oar):
    center = box.center
    return any(area.contains_point(center) for area in oar)


def remove_boxes_in_areas(boxes, oar):
    """Drops every box whose centre lies inside an occlusion area."""

    if not oar:
        return list(boxes)

    return [box for box in boxes if not in_any_area(box, oar)]


def in_front(box, other):
    """True when ``other`` overlaps ``box`` and is nearer the camera.

    Seen from a level camera above the water, the nearer of two hulls ends
    lower in the image.
    """

    return other.y_br > box.y_br and intersection_area(box.tlbr, other.tlbr) > 0


def predict_box_ais(last_box, ais_traj, t):
    """Shifts ``last_box`` by the pixel displacement of ``ais_traj`` between
    ``t - 1`` and ``t``. Returns ``None`` when either point is missing."""

    current = ais_traj.pixel_at(t)
    previous = ais_traj.pixel_at(t - 1)

    if current is None or previous is None:
        return None

    dx, dy = current.x - previous.x, current.y - previous.y
    return last_box.shifted(dx, dy, t=t, predicted=True)


def visual_displacement(history, delta=5.0):
    """Per-second anchor motion: the displacement between the newest point of
    ``history`` and the one ``delta - 1`` seconds older, divided by
    ``delta``. Without a point at exactly that age, the oldest point of the
    window (or the newest before it, across a gap) is used and the divisor is
    the time actually covered."""

    if len(history) < 2:
        return 0.0, 0.0

    t_last, p_last = history[-1]
    target = t_last - (delta - 1)
    window = [(ts, p) for ts, p in history[:-1] if ts >= target]
    t_old, p_old = window[0] if window else history[-2]

    if t_old == target:
        divisor = delta
    else:
        divisor = t_last - t_old

    if divisor <= 0:
        return 0.0, 0.0

    return (p_last.x - p_old.x) / divisor, (p_last.y - p_old.y) / divisor


def predict_box_visual(track, t, delta=5.0):
    """Shifts the track's last box by the motion of its last real
    observations."""

    dx, dy = visual_displacement(track.observations, delta)
    return track.last_box.shifted(dx, dy, t=t, predicted=True)


def update_feature_bank(bank, tracks, oar):
    """Keeps the appearance of occluded tracks frozen.

    A track entering occlusion banks its current smoothed embedding, a track
    already banked keeps its entry, and entries of tracks outside every
    occlusion area are dropped.
    """

    new_bank = {}

    for track in tracks:
        if track.last_box is None or not in_any_area(track.last_box, oar):
            continue

        if track.id in bank:
            new_bank[track.id] = bank[track.id]
        elif track.smoothed_embedding is not None:
            new_bank[track.id] = track.smoothed_embedding

    return new_bank


def cosine_distance(a, b):
    return 1.0 - float(np.dot(a, b))


def reappearances(visible, predicted, min_iou):
    """Pairs detections that came back into view with the predicted boxes of
    occluded tracks, on the largest overlap. Pairs below ``min_iou`` are not
    formed."""

    if not visible or not predicted:
        return []

    costs = np.full((len(visible), len(predicted)), np.inf)

    for i, det in enumerate(visible):
        for j, box in enumerate(predicted):
            overlap = iou(det.tlbr, box.tlbr)

            if overlap >= min_iou:
                costs[i, j] = -overlap

    return solve(costs)


@dataclass(eq=False)
class Track:
    """A visual vessel trajectory and its Kalman state."""

    id: int
    mean: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    last_box: DetectionBox
    n_init: int
    max_age: int
    status: str = TrackStatus.TENTATIVE
    hits: int = 1
    age: int = 1
    time_since_update: int = 0
    #: Consecutive ticks updated from predicted boxes.
    occluded_ticks: int = 0
    history: list = field(default_factory=list, repr=False)
    #: Anchors of real detections only.
    observations: list = field(default_factory=list, repr=False)
    smoothed_embedding: np.ndarray = field(default=None, repr=False)

    @property
    def is_confirmed(self):
        return self.status == TrackStatus.CONFIRMED

    @property
    def is_lost(self):
        return self.status == TrackStatus.LOST

    @property
    def updated(self):
        """True when the track was associated with a box this tick."""
        return self.time_since_update == 0


class Tracker:
    """Anti-occlusion tracking-by-detection over one-second ticks.

    The tracker owns the live tracks ``T_vis``, the occlusion areas ``OAR``
    and the feature bank ``F_id``; :meth:`track_step` advances all three.

    Association runs in two stages: gated motion and appearance costs first,
    then box overlap for the tracks updated on the previous tick that are
    still unmatched.

    :param config: A :class:`~vesfuse.config.Config`.
    """

    def __init__(self, config):
        self.kf = KalmanFilter(
            std_position=config.KF_STD_POSITION,
            std_velocity=config.KF_STD_VELOCITY,
            std_aspect=config.KF_STD_ASPECT,
        )
        self.anti_occlusion = config.ANTI_OCCLUSION
        self.omega = config.OMEGA
        self.delta = config.DELTA
        self.max_occlusion = config.MAX_OCCLUSION
        self.lam = config.TRACK_LAMBDA
        self.gating_threshold = config.GATING_THRESHOLD
        self.max_cost = config.MAX_COST
        self.min_iou = 1.0 - config.MAX_IOU_DISTANCE
        self.n_init = config.N_INIT
        self.max_age = config.MAX_AGE
        self.anchor = config.TRACK_ANCHOR
        self.retention = config.RETENTION

        self.tracks = []
        self.oar = []
        self.bank = {}
        self.t = None
        self._next_id = itertools.count(1)

    def _pair_cost(self, track, detections, measurements):
        gating = self.kf.gating_distance(track.mean, track.covariance, measurements)
        row = np.full(len(detections), np.inf)

        for j, det in enumerate(detections):
            # Boxes handed to a track belong to it alone.
            if det.source_track is not None:
                if det.source_track == track.id:
                    row[j] = (1 - self.lam) * self._appearance(track, det)
                continue

            if gating[j] > self.gating_threshold:
                continue

            motion = gating[j] / self.gating_threshold

            if track.smoothed_embedding is None or det.embedding is None:
                cost = motion
            else:
                cost = self.lam * motion + (1 - self.lam) * self._appearance(
                    track, det
                )

            if cost <= self.max_cost:
                row[j] = cost

        return row

    @staticmethod
    def _appearance(track, det):
        if track.smoothed_embedding is None or det.embedding is None:
            return 0.0
        return cosine_distance(track.smoothed_embedding, det.embedding)

    def _cost_matrix(self, tracks, detections):
        if not tracks or not detections:
            return np.zeros((len(tracks), len(detections)))

        measurements = np.array([det.to_xyah() for det in detections])
        return np.array(
            [self._pair_cost(track, detections, measurements) for track in tracks]
        )

    def _overlap_matches(self, detections, matches):
        """Matches the tracks updated on the previous tick that the first
        stage left alone to the remaining real detections, on ``1 - IoU``
        against the Kalman-predicted box."""

        matched_tracks = {i for i, _ in matches}
        matched_dets = {j for _, j in matches}
        tracks = []
        expected = []

        for i, track in enumerate(self.tracks):
            if i in matched_tracks or track.time_since_update != 1:
                continue

            try:
                expected.append(box_from_xyah(track.last_box.t, track.mean))
            except InvalidArgumentError:
                continue

            tracks.append(i)

        free = [
            j
            for j, det in enumerate(detections)
            if j not in matched_dets and det.source_track is None
        ]

        if not tracks or not free:
            return []

        costs = np.full((len(tracks), len(free)), np.inf)

        for a, box in enumerate(expected):
            for b, j in enumerate(free):
                overlap = iou(box.tlbr, detections[j].tlbr)

                if overlap >= self.min_iou:
                    costs[a, b] = 1.0 - overlap

        return [(tracks[a], free[b]) for a, b in solve(costs)]

    def _append_history(self, track, t, observed=False):
        point = track.last_box.anchor(self.anchor)
        track.history.append((t, point))

        if observed:
            track.observations.append((t, point))

        for points in (track.history, track.observations):
            while points and t - points[0][0] > self.retention:
                points.pop(0)

    def _update(self, track, det, t):
        track.mean, track.covariance = self.kf.update(
            track.mean, track.covariance, det.to_xyah()
        )
        track.last_box = det
        track.hits += 1
        track.time_since_update = 0
        track.occluded_ticks = track.occluded_ticks + 1 if det.predicted else 0

        if det.embedding is not None and not det.predicted:
            if track.smoothed_embedding is None:
                track.smoothed_embedding = det.embedding
            else:
                mixed = 0.9 * track.smoothed_embedding + 0.1 * det.embedding
                track.smoothed_embedding = mixed / np.linalg.norm(mixed)

        if track.status == TrackStatus.TENTATIVE and track.hits >= self.n_init:
            track.status = TrackStatus.CONFIRMED

        self._append_history(track, t, observed=not det.predicted)

    def _mark_missed(self, track, t):
        tentative = track.status == TrackStatus.TENTATIVE

        if tentative or track.time_since_update > self.max_age:
            track.status = TrackStatus.LOST
            return

        try:
            track.last_box = box_from_xyah(t, track.mean)
        except InvalidArgumentError:
            track.last_box = track.last_box.shifted(0, 0, t=t)

        self._append_history(track, t)

    def _initiate(self, det, t):
        mean, covariance = self.kf.initiate(det.to_xyah())
        track = Track(
            id=next(self._next_id),
            mean=mean,
            covariance=covariance,
            last_box=det.shifted(0, 0, source_track=None),
            n_init=self.n_init,
            max_age=self.max_age,
            smoothed_embedding=det.embedding,
        )

        if self.n_init <= 1:
            track.status = TrackStatus.CONFIRMED

        self._append_history(track, t, observed=True)
        logger.debug("Started track %s at %s", track.id, t)
        return track

    def _occluded_boxes(self, t, t_ais, b_last):
        bound = {track_id: mmsi for mmsi, track_id in b_last}
        predicted = []

        for track in self.tracks:
            if not track.is_confirmed or not in_any_area(track.last_box, self.oar):
                continue

            if track.occluded_ticks >= self.max_occlusion:
                continue

            box = None
            mmsi = bound.get(track.id)

            if mmsi is not None and mmsi in t_ais:
                box = predict_box_ais(track.last_box, t_ais[mmsi], t)

            if box is None:
                box = predict_box_visual(track, t, self.delta)

            predicted.append(
                box.shifted(
                    0,
                    0,
                    embedding=self.bank.get(track.id),
                    predicted=True,
                    source_track=track.id,
                )
            )

        return predicted

    def _occlusion_inputs(self, t, detections, t_ais, b_last):
        """Replaces the detections inside the occlusion areas of the previous
        tick that a nearer detection overlaps with predicted boxes of the
        occluded tracks.

        Every other detection is in plain view and goes to the tracker. When
        it covers the predicted box of an occluded track it is handed to that
        track, which ends the occlusion. Returns the tracker inputs and the
        detections left out.
        """

        kept = remove_boxes_in_areas(detections, self.oar)
        withheld = [
            det
            for det in detections
            if det not in kept
            and any(in_front(det, other) for other in detections if other is not det)
        ]
        visible = [det for det in detections if det not in withheld]
        predicted = self._occluded_boxes(t, t_ais, b_last)
        resumed = dict(reappearances(visible, predicted, self.min_iou))
        ended = set(resumed.values())
        inputs = []

        for i, det in enumerate(visible):
            if i in resumed:
                owner = predicted[resumed[i]].source_track
                det = det.shifted(0, 0, source_track=owner)
            inputs.append(det)

        inputs.extend(box for j, box in enumerate(predicted) if j not in ended)
        logger.debug(
            "Tick %s: %d detections withheld, %d tracks predicted, %d resumed",
            t,
            len(withheld),
            len(predicted) - len(ended),
            len(ended),
        )
        return inputs, withheld

    def track_step(self, t, detections, t_ais=None, b_last=()):
        """Runs one tick.

        :param t: The tick time, later than the previous one.
        :param detections: The :class:`~vesfuse.model.DetectionBox` list of
                           the tick, all stamped ``t``.
        :param t_ais: AIS pixel trajectories keyed by MMSI.
        :param b_last: The association set of the previous tick as
                       ``(mmsi, track_id)`` pairs.
        :returns: ``(tracks, oar, bank)`` after the tick.
        """

        if self.t is not None and t <= self.t:
            raise InvalidArgumentError(f"Tick {t} is not after {self.t}")

        if any(det.t != t for det in detections):
            raise InvalidArgumentError(f"Detections not stamped with tick {t}")

        t_ais = t_ais or {}
        detections = list(detections)
        withheld = []

        if self.anti_occlusion:
            self.bank = update_feature_bank(self.bank, self.tracks, self.oar)
            inputs, withheld = self._occlusion_inputs(t, detections, t_ais, b_last)
        else:
            self.bank = {}
            inputs = detections

        for track in self.tracks:
            track.mean, track.covariance = self.kf.predict(track.mean, track.covariance)
            track.age += 1
            track.time_since_update += 1

        matches = solve(self._cost_matrix(self.tracks, inputs))
        matches += self._overlap_matches(inputs, matches)
        matched_tracks = {i for i, _ in matches}
        matched_dets = {j for _, j in matches}
        # Every box of the tick with the track it belongs to.
        observed = list(withheld)

        for i, j in matches:
            track = self.tracks[i]
            self._update(track, inputs[j], t)
            observed.append(inputs[j].shifted(0, 0, source_track=track.id))

        for i, track in enumerate(self.tracks):
            if i not in matched_tracks:
                self._mark_missed(track, t)

        survivors = [track for track in self.tracks if not track.is_lost]
        predicted = [det for det in inputs if det.predicted]

        for j, det in enumerate(inputs):
            if j in matched_dets or det.predicted:
                continue

            # A box already covered by an occluded track does not start a new one.
            if any(iou(det.tlbr, p.tlbr) >= 0.5 for p in predicted):
                observed.append(det.shifted(0, 0, source_track=None))
                continue

            track = self._initiate(det, t)
            survivors.append(track)
            observed.append(det.shifted(0, 0, source_track=track.id))

        self.tracks = survivors
        self.t = t

        if self.anti_occlusion:
            self.oar = detect_occlusion_areas(observed, self.omega)

        logger.debug(
            "Tick %s: %d detections, %d tracks, %d occlusion areas",
            t,
            len(detections),
            len(self.tracks),
            len(self.oar),
        )

        return self.tracks, self.oar, self.bank
