"""
    vesfuse.metrics
    ~~~~~~~~~~~~~~~

    Evaluation of fused annotations against ground truth, one second at a
    time. Boxes are paired by IoU with a ``motmetrics`` accumulator; the MMSI
    labels of paired boxes give the fusion counters (MOFA, IDP, IDR, IDF1,
    MOFP) while the accumulator itself gives Precision, Recall, MOTA and the
    track identity scores.
"""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

import motmetrics as mm

from vesfuse.exc import UndefinedMetricError
from vesfuse.model import ModelMixin

logger = logging.getLogger(__name__)

MOT_METRICS = [
    "num_objects",
    "num_detections",
    "num_false_positives",
    "num_misses",
    "num_switches",
    "idtp",
    "idfp",
    "idfn",
]


def _ratio(num, den, name):
    if den == 0:
        raise UndefinedMetricError(f"{name} is undefined with a zero denominator")

    return num / den


def mofa(fn, fp, gt):
    """Multi-object fusion accuracy ``1 - (FN + FP) / GT`` over MMSI labels."""
    return 1.0 - _ratio(fn + fp, gt, "MOFA")


def idp(tp, fp):
    return _ratio(tp, tp + fp, "IDP")


def idr(tp, fn):
    return _ratio(tp, tp + fn, "IDR")


def idf1(tp, fp, fn):
    return _ratio(2 * tp, 2 * tp + fp + fn, "IDF1")


def id_scores(tp, fp, fn):
    """``(IDP, IDR, IDF1)``; raises on the first undefined score."""
    return idp(tp, fp), idr(tp, fn), idf1(tp, fp, fn)


def precision(tp, fp):
    return _ratio(tp, tp + fp, "Precision")


def recall(tp, fn):
    return _ratio(tp, tp + fn, "Recall")


def precision_recall(tp, fp, fn):
    return precision(tp, fp), recall(tp, fn)


def mota(fp, fn, id_switches, gt):
    return 1.0 - _ratio(fp + fn + id_switches, gt, "MOTA")


def mofp(distances):
    """Mean localization distance of the matched pairs.

    :param distances: One sequence of normalized distances per second.
    """

    flat = list(itertools.chain.from_iterable(distances))
    return _ratio(math.fsum(flat), len(flat), "MOFP")


@dataclass
class FusionReport(ModelMixin):
    """Raw counters of one clip (or of several, summed)."""

    clip: str = "clip"
    #: MMSI-labelled ground truth boxes and fusion outcomes.
    gt_mmsi: int = 0
    tp_mmsi: int = 0
    fp_mmsi: int = 0
    fn_mmsi: int = 0
    #: Box-level detection outcomes.
    gt_boxes: int = 0
    tp_boxes: int = 0
    fp_boxes: int = 0
    fn_boxes: int = 0
    id_switches: int = 0
    #: Track identity outcomes over the global track correspondence.
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    #: Sum of normalized centre distances over the MMSI true positives.
    distance_sum: float = 0.0
    matches: int = 0

    def rates(self):
        """Every metric of the report, ``None`` where undefined."""

        def safe(func, *args):
            try:
                return func(*args)
            except UndefinedMetricError:
                return None

        return {
            "MOFA": safe(mofa, self.fn_mmsi, self.fp_mmsi, self.gt_mmsi),
            "IDP": safe(idp, self.tp_mmsi, self.fp_mmsi),
            "IDR": safe(idr, self.tp_mmsi, self.fn_mmsi),
            "IDF1": safe(idf1, self.tp_mmsi, self.fp_mmsi, self.fn_mmsi),
            "MOFP": safe(_ratio, self.distance_sum, self.matches, "MOFP"),
            "MOTA": safe(
                mota, self.fp_boxes, self.fn_boxes, self.id_switches, self.gt_boxes
            ),
            "Precision": safe(precision, self.tp_boxes, self.fp_boxes),
            "Recall": safe(recall, self.tp_boxes, self.fn_boxes),
            "TrackIDP": safe(idp, self.idtp, self.idfp),
            "TrackIDR": safe(idr, self.idtp, self.idfn),
            "TrackIDF1": safe(idf1, self.idtp, self.idfp, self.idfn),
        }

    def export(self):
        data = self.export_data(exclude=("clip",))
        return {"clip": self.clip, "metrics": self.rates(), "counters": data}

    @classmethod
    def aggregate(cls, reports, clip="aggregate"):
        """Sums the counters of several reports."""

        total = cls(clip=clip)

        for report in reports:
            for f in fields(cls):
                if f.name != "clip":
                    value = getattr(total, f.name) + getattr(report, f.name)
                    setattr(total, f.name, value)

        return total


def _by_tick(items):
    grouped = defaultdict(list)

    for item in items:
        grouped[item.t].append(item)

    return grouped


def _center(box):
    return ((box[0] + box[2]) / 2.0, (box[1] + box[3]) / 2.0)


def _tlwh(box):
    return [box[0], box[1], box[2] - box[0], box[3] - box[1]]


def iou_distances(gt_boxes, pred_boxes, iou_threshold=0.5):
    """``1 - IoU`` between ground truth rows and prediction columns, ``NaN``
    where the overlap is below ``iou_threshold``."""

    return mm.distances.iou_matrix(
        [_tlwh(box) for box in gt_boxes],
        [_tlwh(box) for box in pred_boxes],
        max_iou=1.0 - iou_threshold,
    )


def _summary(acc, clip):
    mh = mm.metrics.create()
    summary = mh.compute(acc, metrics=MOT_METRICS, name=clip)
    return {name: int(summary.loc[clip, name]) for name in MOT_METRICS}


def _matched_pairs(acc, frames):
    """``(tick, gt_id, pred_id)`` for every ground truth box the accumulator
    paired with a prediction."""

    events = acc.mot_events
    paired = events[events.Type.isin(["MATCH", "SWITCH"])]
    frame_ids = paired.index.get_level_values("FrameId")

    for frame, oid, hid in zip(frame_ids, paired.OId, paired.HId):
        yield frames[int(frame)], oid, hid


def evaluate(annotations, gts, image_diagonal, iou_threshold=0.5, clip="clip"):
    """Evaluates fused annotations of one clip.

    Predictions and ground truth boxes are paired second by second with a
    ``motmetrics`` accumulator, which also counts the box outcomes, the
    identity switches and the track identity scores. The MMSI labels of the
    pairs give the fusion counters.

    :param annotations: :class:`~vesfuse.model.FusedAnnotation` records.
    :param gts: :class:`~vesfuse.model.GroundTruthRecord` records.
    :param image_diagonal: Pixels; normalizes the MOFP distances.
    """

    report = FusionReport(clip=clip)
    preds_by_tick = _by_tick(annotations)
    gts_by_tick = _by_tick(gt for gt in gts if gt.in_view)
    frames = sorted(set(preds_by_tick) | set(gts_by_tick))

    if not frames:
        return report

    acc = mm.MOTAccumulator()

    for frame, t in enumerate(frames):
        preds = preds_by_tick.get(t, [])
        truth = gts_by_tick.get(t, [])
        distances = iou_distances(
            [g.box for g in truth], [p.box for p in preds], iou_threshold
        )
        acc.update(
            [g.track_id for g in truth],
            [p.track for p in preds],
            distances,
            frameid=frame,
        )

    counts = _summary(acc, clip)
    report.gt_boxes = counts["num_objects"]
    report.tp_boxes = counts["num_detections"]
    report.fp_boxes = counts["num_false_positives"]
    report.fn_boxes = counts["num_misses"]
    report.id_switches = counts["num_switches"]
    report.idtp, report.idfp, report.idfn = (
        counts["idtp"],
        counts["idfp"],
        counts["idfn"],
    )

    paired = defaultdict(dict)

    for t, gt_id, track in _matched_pairs(acc, frames):
        paired[t][gt_id] = track

    for t in frames:
        preds = {p.track: p for p in preds_by_tick.get(t, [])}
        matched = paired.get(t, {})
        labelled = set()

        for gt in gts_by_tick.get(t, []):
            pred = preds.get(matched.get(gt.track_id))

            if pred is not None:
                labelled.add(pred.track)

            if gt.mmsi <= 0:
                if pred is not None and pred.mmsi is not None:
                    report.fp_mmsi += 1
                continue

            report.gt_mmsi += 1

            if pred is not None and pred.mmsi == gt.mmsi:
                report.tp_mmsi += 1
                (px, py), (gx, gy) = _center(pred.box), _center(gt.box)
                report.distance_sum += math.hypot(px - gx, py - gy) / image_diagonal
                report.matches += 1
            else:
                report.fn_mmsi += 1

                if pred is not None and pred.mmsi is not None:
                    report.fp_mmsi += 1

        report.fp_mmsi += sum(
            1
            for track, pred in preds.items()
            if track not in labelled and pred.mmsi is not None
        )

    logger.debug("Evaluated clip %s: %s", clip, asdict(report))
    return report


def evaluate_detections(detections, gts, iou_threshold=0.5, clip="detection"):
    """Box-level counters of raw detections, for the detection-only
    Precision and Recall. Every detection is its own hypothesis."""

    report = FusionReport(clip=clip)
    dets_by_tick = _by_tick(detections)
    gts_by_tick = _by_tick(gt for gt in gts if gt.in_view)
    frames = sorted(set(dets_by_tick) | set(gts_by_tick))

    if not frames:
        return report

    acc = mm.MOTAccumulator()
    hypotheses = itertools.count()

    for frame, t in enumerate(frames):
        dets = dets_by_tick.get(t, [])
        truth = gts_by_tick.get(t, [])
        distances = iou_distances(
            [g.box for g in truth], [d.tlbr for d in dets], iou_threshold
        )
        acc.update(
            [g.track_id for g in truth],
            [next(hypotheses) for _ in dets],
            distances,
            frameid=frame,
        )

    counts = _summary(acc, clip)
    report.gt_boxes = counts["num_objects"]
    report.tp_boxes = counts["num_detections"]
    report.fp_boxes = counts["num_false_positives"]
    report.fn_boxes = counts["num_misses"]
    return report
