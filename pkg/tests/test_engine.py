import math
from collections import defaultdict

import numpy as np
import pytest
from common import MMSI, StraightVessel, make_track, pixel_trajectory, unit
from conftest import slow

from vesfuse.ais import AisStore, clean, pixel_trajectories, update_store
from vesfuse.config import Config
from vesfuse.engine import (
    FusionEngine,
    FusionState,
    MatchCount,
    build_similarity_matrix,
    fuse_tick,
    promote_associations,
    replay,
    tick_range,
    update_counts,
)
from vesfuse.exc import RejectedTickError
from vesfuse.metrics import evaluate
from vesfuse.model import DetectionBox, iou
from vesfuse.similarity import e_fastdtw, euclidean_similarity
from vesfuse.simulator import (
    LIBRARY,
    crossing,
    emit_ais,
    emit_detections,
    ground_truth,
)
from vesfuse.testing import CallCounter
from vesfuse.tracking import predict_box_ais

parametrize = pytest.mark.parametrize

inf = np.inf

EMBEDDING = unit(1, 0, 0, 0)


def flat(x, y, n=3):
    return [(x + k, y) for k in range(n)]


class TestBuildSimilarityMatrix:
    def test_ordering_and_values(self):
        t_ais = {
            MMSI + 1: pixel_trajectory(MMSI + 1, flat(400, 304)),
            MMSI: pixel_trajectory(MMSI, flat(100, 300)),
        }
        tracks = [make_track(2, flat(400, 300)), make_track(1, flat(100, 300))]

        costs, mmsis, track_ids = build_similarity_matrix(
            t_ais, tracks, frozenset(), 640.0, euclidean_similarity
        )

        assert mmsis == [MMSI, MMSI + 1]
        assert track_ids == [1, 2]
        assert costs.tolist() == [
            [0.0, 300.0],
            [pytest.approx(np.hypot(300, 4)), 4.0],
        ]

    def test_distance_gate(self):
        t_ais = {MMSI: pixel_trajectory(MMSI, flat(100, 300))}
        tracks = [make_track(1, flat(100, 300)), make_track(2, flat(900, 300))]

        costs, _, _ = build_similarity_matrix(
            t_ais, tracks, frozenset(), 500.0, e_fastdtw
        )

        assert costs[0, 0] == 0.0
        assert costs[0, 1] == inf

    def test_bound_pairs_are_forced(self):
        t_ais = {
            MMSI: pixel_trajectory(MMSI, flat(100, 300)),
            MMSI + 1: pixel_trajectory(MMSI + 1, flat(150, 300)),
        }
        tracks = [make_track(1, flat(100, 300)), make_track(2, flat(150, 300))]
        counter = CallCounter(euclidean_similarity)

        costs, _, _ = build_similarity_matrix(
            t_ais, tracks, frozenset({(MMSI, 1)}), 640.0, counter
        )

        assert costs.tolist() == [[-inf, inf], [inf, 0.0]]
        assert counter.calls == 1

    def test_tracks_without_history_are_skipped(self):
        track = make_track(1, flat(100, 300))
        track.history = []
        t_ais = {MMSI: pixel_trajectory(MMSI, flat(100, 300))}

        costs, _, _ = build_similarity_matrix(
            t_ais, [track], frozenset(), 640.0, euclidean_similarity
        )

        assert costs.tolist() == [[inf]]

    def test_empty(self):
        costs, mmsis, track_ids = build_similarity_matrix(
            {}, [], frozenset(), 640.0, e_fastdtw
        )

        assert costs.shape == (0, 0)
        assert mmsis == track_ids == []


class TestUpdateCounts:
    def test_new_and_repeated_pairs(self):
        m_last = {(MMSI, 1): MatchCount(3, 9.0)}

        counts = update_counts(m_last, [(MMSI, 1), (MMSI + 1, 2)], 10.0, 15.0)

        assert counts == {
            (MMSI, 1): MatchCount(4, 10.0),
            (MMSI + 1, 2): MatchCount(1, 10.0),
        }

    def test_unmatched_pairs_expire(self):
        m_last = {(MMSI, 1): MatchCount(5, 0.0), (MMSI, 2): MatchCount(5, 1.0)}

        counts = update_counts(m_last, [], 15.0, 15.0)

        assert counts == {(MMSI, 2): MatchCount(5, 1.0)}

    def test_input_is_not_modified(self):
        m_last = {(MMSI, 1): MatchCount(1, 0.0)}

        update_counts(m_last, [(MMSI, 1)], 1.0, 15.0)

        assert m_last == {(MMSI, 1): MatchCount(1, 0.0)}


class TestPromoteAssociations:
    def test_threshold_is_exclusive(self):
        counts = {(MMSI, 1): MatchCount(15, 0.0), (MMSI + 1, 2): MatchCount(16, 0.0)}

        assert promote_associations(counts, 15) == {(MMSI + 1, 2)}

    def test_one_to_one(self):
        counts = {
            (MMSI, 1): MatchCount(20, 0.0),
            (MMSI, 2): MatchCount(30, 0.0),
            (MMSI + 1, 2): MatchCount(30, 0.0),
            (MMSI + 2, 3): MatchCount(17, 0.0),
        }

        assert promote_associations(counts, 15) == {(MMSI, 2), (MMSI + 2, 3)}


def run_vessel(engine, vessel, ticks, detect=lambda t: True):
    """Ticks the engine once per second with one AIS report of ``vessel``
    and, when ``detect(t)`` holds, its detection box."""

    results = {}

    for t in ticks:
        boxes = [vessel.box(t, t)] if detect(t) else []
        results[t] = engine.tick(t, [vessel.report(t, t)], boxes)

    return results


class TestFusionEngine:
    @pytest.fixture
    def vessel(self, cam):
        return StraightVessel(cam, embedding=EMBEDDING)

    def test_binding(self, config, vessel):
        engine = FusionEngine(config)
        results = run_vessel(engine, vessel, range(1, 18))

        assert results[1] == []
        assert [results[t][0].provenance for t in range(2, 17)] == ["matched"] * 15
        assert results[17][0].provenance == "associated"
        assert all(results[t][0].mmsi == MMSI for t in range(2, 18))
        assert engine.associations == {(MMSI, 1)}

    def test_annotation_content(self, config, vessel):
        engine = FusionEngine(config)
        results = run_vessel(engine, vessel, range(1, 3))
        annotation = results[2][0]

        assert annotation.t == 2
        assert annotation.track == 1
        assert annotation.box == pytest.approx(vessel.box(2, 2).tlbr)
        assert annotation.ais["sog"] == pytest.approx(vessel.report(2, 2).sog)
        assert annotation.predicted is False

    def test_bound_pairs_skip_similarity(self, config, vessel):
        counter = CallCounter(e_fastdtw)
        engine = FusionEngine(config, similarity=counter)
        run_vessel(engine, vessel, range(1, 18))

        assert counter.calls == 16

        counter.reset()
        run_vessel(engine, vessel, [18])

        assert counter.calls == 0

    def test_lost_track_dissolves_the_association(self, config, vessel):
        engine = FusionEngine(config)
        run_vessel(engine, vessel, range(1, 18))
        results = run_vessel(engine, vessel, range(18, 24), detect=lambda t: False)

        assert all(results[t] == [] for t in range(18, 24))
        assert engine.associations == frozenset()
        assert engine.state.tracker.tracks == []

    def test_dissolved_pairs_start_counting_again(self, config, vessel):
        engine = FusionEngine(config)
        run_vessel(engine, vessel, range(1, 18))
        assert engine.state.counts[(MMSI, 1)].z == 16

        run_vessel(engine, vessel, range(18, 24), detect=lambda t: False)

        assert engine.associations == frozenset()
        assert (MMSI, 1) not in engine.state.counts

    def test_unmatched_tracks(self, config, cam):
        vessel = StraightVessel(cam, embedding=EMBEDDING)
        engine = FusionEngine(config)

        for t in range(1, 4):
            annotations = engine.tick(t, [], [vessel.box(t, t)])

        assert [(a.provenance, a.mmsi, a.ais) for a in annotations] == [
            ("unmatched", None, None)
        ]

    def test_far_tracks_are_not_matched(self, config, cam):
        config.D_MAX = 10.0
        near = StraightVessel(cam, embedding=EMBEDDING)
        far = StraightVessel(cam, east=100.0, embedding=EMBEDDING)
        engine = FusionEngine(config)

        for t in range(1, 4):
            annotations = engine.tick(t, [far.report(t, t)], [near.box(t, t)])

        assert annotations[0].provenance == "unmatched"

    def test_two_vessels(self, config, cam):
        a = StraightVessel(cam, mmsi=MMSI, east=-150.0, embedding=unit(1, 0, 0, 0))
        b = StraightVessel(cam, mmsi=MMSI + 1, east=150.0, embedding=unit(0, 1, 0, 0))
        engine = FusionEngine(config)

        for t in range(1, 20):
            annotations = engine.tick(
                t, [a.report(t, t), b.report(t, t)], [a.box(t, t), b.box(t, t)]
            )

        assert [(x.track, x.mmsi, x.provenance) for x in annotations] == [
            (1, MMSI, "associated"),
            (2, MMSI + 1, "associated"),
        ]


class TestRejections:
    @parametrize("t", [5, 4])
    def test_tick_must_advance(self, config, t):
        state = FusionState.initial(config)
        fuse_tick([], [], state, config, 5)

        with pytest.raises(RejectedTickError):
            fuse_tick([], [], state, config, t)

        assert state.t == 5

    def test_detection_time(self, config, cam):
        vessel = StraightVessel(cam)
        state = FusionState.initial(config)

        with pytest.raises(RejectedTickError):
            fuse_tick([], [vessel.box(4, 4)], state, config, 5)

        assert state.t is None
        assert state.tracker.tracks == []

    @parametrize("received", [3.9, 4.0, 5.5])
    def test_ais_window(self, config, cam, received):
        vessel = StraightVessel(cam)
        state = FusionState.initial(config)

        with pytest.raises(RejectedTickError):
            fuse_tick([vessel.report(received, 0)], [], state, config, 5)

        assert state.t is None
        assert len(state.store) == 0

    def test_ais_window_upper_bound_is_inclusive(self, config, cam):
        vessel = StraightVessel(cam)
        state = FusionState.initial(config)

        fuse_tick([vessel.report(4.1, 0), vessel.report(5.0, 0)], [], state, config, 5)

        assert state.t == 5


class TestReplay:
    def test_tick_range(self, cam):
        vessel = StraightVessel(cam)

        assert list(tick_range([], [])) == []
        assert list(tick_range([vessel.report(2.3, 0)], [(5, [])])) == [3, 4, 5]

    def test_reports_are_bucketed_by_ceiling(self, config, cam):
        vessel = StraightVessel(cam, embedding=EMBEDDING)
        records = [vessel.report(t - 0.4, t) for t in range(1, 20)]
        ticks = [(t, [vessel.box(t, t)]) for t in range(1, 20)]

        annotations, durations = replay(records, ticks, config)

        assert len(durations) == 19
        assert annotations[-1].provenance == "associated"
        assert annotations[-1].mmsi == MMSI

    def test_durations_come_from_the_clock(self, config, cam):
        vessel = StraightVessel(cam)
        clock = iter(range(100)).__next__

        _, durations = replay([vessel.report(1, 1)], [(2, [])], config, clock=clock)

        assert durations == [1, 1]

    def test_fractional_detection_times(self, config, cam):
        vessel = StraightVessel(cam)

        with pytest.raises(RejectedTickError):
            replay([], [(1.5, [vessel.box(1.5, 1.5)])], config)

    def test_deterministic(self, config, crossing_scene):
        records = emit_ais(crossing_scene)
        ticks = emit_detections(crossing_scene)[:30]

        first, _ = replay(records, ticks, config)
        second, _ = replay(records, ticks, config)

        assert first == second


@slow
def test_crossing_vessels_are_associated(config, crossing_scene):
    ticks = emit_detections(crossing_scene)
    annotations, durations = replay(emit_ais(crossing_scene), ticks, config)
    deadline = crossing_scene.t0 + 50
    associated = {
        a.mmsi
        for a in annotations
        if a.provenance == "associated" and a.t <= deadline
    }
    expected = {vessel.mmsi for vessel in crossing_scene.vessels}

    assert associated == expected
    assert all(math.isfinite(d) and d >= 0 for d in durations)


def run_scene(scene, anti_occlusion):
    config = Config().update(anti_occlusion=anti_occlusion)
    annotations, durations = replay(emit_ais(scene), emit_detections(scene), config)
    report = evaluate(annotations, ground_truth(scene), scene.camera.diagonal)
    return report, durations


@slow
def test_crossing_keeps_both_identities():
    on = [run_scene(crossing(seed), True)[0] for seed in range(20)]
    off = [run_scene(crossing(seed), False)[0] for seed in range(20)]

    assert sum(report.id_switches == 0 for report in on) >= 18
    assert sum(r.id_switches for r in on) < sum(r.id_switches for r in off)


@slow
def test_anti_occlusion_improves_fusion_accuracy():
    gains = []

    for seed in range(20):
        scene = LIBRARY["mixed"](seed)
        on = run_scene(scene, True)[0].rates()["MOFA"]
        off = run_scene(scene, False)[0].rates()["MOFA"]
        gains.append(on - off)

    assert sum(gain >= 0 for gain in gains) >= 16
    assert np.mean(gains) >= 0.03


@slow
def test_busy_scene_tick_budget():
    _, durations = run_scene(LIBRARY["busy"](seed=1), True)

    assert max(durations) <= 0.5


@slow
@parametrize("seed", range(20))
def test_ais_prediction_follows_a_hidden_vessel(seed):
    scene = crossing(seed)
    cam = scene.camera
    mmsi = 413000002
    start, end = scene.t0 + 43, scene.t0 + 48
    boxes = {r.t: r.box for r in ground_truth(scene) if r.mmsi == mmsi}
    reports = defaultdict(list)

    for r in emit_ais(scene):
        reports[math.ceil(r.t)].append(r)

    store = AisStore()
    box = DetectionBox(start, *boxes[start])

    for t in range(int(scene.t0), int(end) + 1):
        update_store(store, clean(reports[t], cam, now=t), t, cam)

        if start < t:
            box = predict_box_ais(box, pixel_trajectories(store, cam)[mmsi], t)

    assert box.predicted
    assert iou(box.tlbr, boxes[end]) >= 0.5
