"""
    vesfuse.formats
    ~~~~~~~~~~~~~~~

    Readers and writers of the data files: AIS CSV, detections and fused
    annotations as JSON-lines, ground truth CSV, metric reports and DTW
    point lists. Readers raise :class:`~vesfuse.exc.InputFormatError` with
    the 1-based line number and the field at fault; writers are
    deterministic.
"""

import csv
import json
import os
from datetime import datetime, timezone

from vesfuse.exc import (
    InputFormatError,
    InvalidArgumentError,
    OutputExistsError,
    UnsortedInputError,
)
from vesfuse.model import (
    HEADING_UNAVAILABLE,
    AisRecord,
    DetectionBox,
    FusedAnnotation,
    GeoPoint,
    GroundTruthRecord,
    PixelPoint,
)
from vesfuse.utility import finite

AIS_COLUMNS = ("timestamp", "mmsi", "lon", "lat", "speed", "course", "heading")
GT_COLUMNS = ("t", "mmsi", "track_id", "x_tl", "y_tl", "x_br", "y_br")
REPORT_COLUMNS = (
    "MOFA",
    "IDP",
    "IDR",
    "IDF1",
    "MOFP",
    "MOTA",
    "Precision",
    "Recall",
    "TrackIDP",
    "TrackIDR",
    "TrackIDF1",
)


def ensure_writable(path, force=False):
    """Refuses to overwrite ``path`` unless ``force`` is set."""

    if os.path.exists(path) and not force:
        raise OutputExistsError(f"{path} exists, pass --force to overwrite")


def parse_timestamp(value):
    """Unix seconds or an ISO-8601 date; naive dates are UTC."""

    try:
        return float(value)
    except ValueError:
        pass

    text = value.strip()

    if text.endswith("Z"):
        text = text[:-1] + "+00:00"

    moment = datetime.fromisoformat(text)

    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)

    return moment.timestamp()


def _number(row, name, source, line, cast=float, optional=False):
    value = (row.get(name) or "").strip()

    if value == "":
        if optional:
            return None

        raise InputFormatError("Missing value", source, line, name)

    try:
        return cast(value)
    except ValueError:
        raise InputFormatError(f"Invalid value '{value}'", source, line, name)


def _reader(stream, columns, source):
    reader = csv.DictReader(stream)
    missing = [c for c in columns if c not in (reader.fieldnames or ())]

    if missing:
        raise InputFormatError(f"Missing columns {', '.join(missing)}", source, 1)

    return reader


def _check_sorted(t, previous, source, line):
    if previous is not None and t < previous:
        raise UnsortedInputError(f"Time {t} before {previous}", source, line, "t")


def read_ais_csv(path):
    """Reads AIS reports. Empty values become ``None`` (an empty heading
    means "not available") and invalid positions are kept as ``None`` so
    that cleaning drops them; malformed numbers are format errors."""

    records = []
    previous = None

    with open(path, newline="") as stream:
        for line, row in enumerate(_reader(stream, AIS_COLUMNS, path), start=2):
            raw_t = (row.get("timestamp") or "").strip()

            try:
                t = parse_timestamp(raw_t)
            except ValueError:
                raise InputFormatError(
                    f"Invalid timestamp '{raw_t}'", path, line, "timestamp"
                )

            _check_sorted(t, previous, path, line)
            previous = t

            mmsi = _number(row, "mmsi", path, line, int, optional=True)
            lon = _number(row, "lon", path, line, optional=True)
            lat = _number(row, "lat", path, line, optional=True)
            heading = _number(row, "heading", path, line, optional=True)

            pos = None

            if lon is not None and lat is not None:
                try:
                    pos = GeoPoint(lon, lat)
                except InvalidArgumentError:
                    pass

            records.append(
                AisRecord(
                    mmsi=mmsi,
                    t=t,
                    pos=pos,
                    sog=_number(row, "speed", path, line, optional=True),
                    cog=_number(row, "course", path, line, optional=True),
                    heading=HEADING_UNAVAILABLE if heading is None else heading,
                )
            )

    return records


def write_ais_csv(records, path):
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(AIS_COLUMNS)

        for r in sorted(records, key=lambda r: (r.t, r.mmsi)):
            heading = "" if r.heading == HEADING_UNAVAILABLE else repr(float(r.heading))
            writer.writerow(
                [
                    repr(float(r.t)),
                    r.mmsi,
                    repr(r.pos.lon),
                    repr(r.pos.lat),
                    repr(float(r.sog)),
                    repr(float(r.cog)),
                    heading,
                ]
            )


def _json_lines(path):
    with open(path) as stream:
        for line, text in enumerate(stream, start=1):
            if not text.strip():
                continue

            try:
                yield line, json.loads(text)
            except json.JSONDecodeError as e:
                raise InputFormatError(e.msg, path, line)


def _detection(t, item, path, line):
    try:
        (x_tl, y_tl), (x_br, y_br) = item["tl"], item["br"]
        return DetectionBox(
            t=t,
            x_tl=float(x_tl),
            y_tl=float(y_tl),
            x_br=float(x_br),
            y_br=float(y_br),
            confidence=float(item.get("conf", 1.0)),
            embedding=item.get("emb"),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InputFormatError(f"Invalid box: {e}", path, line, "boxes")


def read_detections(path):
    """Reads one ``{"t": ..., "boxes": [...]}`` object per line.

    :returns: ``(t, boxes)`` pairs in file order.
    """

    ticks = []
    previous = None

    for line, data in _json_lines(path):
        if not isinstance(data, dict) or "t" not in data:
            raise InputFormatError("Expected an object with a time", path, line, "t")

        try:
            t = float(data["t"])
        except (TypeError, ValueError):
            raise InputFormatError("Invalid time", path, line, "t")

        if not finite(t):
            raise InputFormatError(f"Time {t} is not finite", path, line, "t")

        if previous is not None and t <= previous:
            raise UnsortedInputError(f"Time {t} not after {previous}", path, line, "t")

        previous = t
        boxes = data.get("boxes", [])

        if not isinstance(boxes, list):
            raise InputFormatError("Expected a list", path, line, "boxes")

        ticks.append((t, [_detection(t, item, path, line) for item in boxes]))

    return ticks


def _plain_number(value):
    if float(value).is_integer() and abs(value) < 2 ** 53:
        return int(value)

    return float(value)


def write_detections(ticks, path):
    with open(path, "w") as stream:
        for t, boxes in ticks:
            items = []

            for box in boxes:
                item = {
                    "tl": [box.x_tl, box.y_tl],
                    "br": [box.x_br, box.y_br],
                    "conf": box.confidence,
                }

                if box.embedding is not None:
                    item["emb"] = [float(v) for v in box.embedding]

                items.append(item)

            stream.write(json.dumps({"t": _plain_number(t), "boxes": items}) + "\n")


def read_gt_csv(path):
    records = []
    previous = None

    with open(path, newline="") as stream:
        for line, row in enumerate(_reader(stream, GT_COLUMNS, path), start=2):
            t = _number(row, "t", path, line)
            _check_sorted(t, previous, path, line)
            previous = t

            box = tuple(_number(row, name, path, line) for name in GT_COLUMNS[3:])
            records.append(
                GroundTruthRecord(
                    t=t,
                    mmsi=_number(row, "mmsi", path, line, int),
                    track_id=_number(row, "track_id", path, line, int),
                    box=box,
                )
            )

    return records


def write_gt_csv(records, path):
    """Writes the in-view records only."""

    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(GT_COLUMNS)

        in_view = [r for r in records if r.in_view]
        in_view.sort(key=lambda r: (r.t, r.track_id))

        for r in in_view:
            box = [repr(float(v)) for v in r.box]
            writer.writerow([_plain_number(r.t), r.mmsi, r.track_id] + box)


def annotation_to_json(annotation):
    return {
        "t": _plain_number(annotation.t),
        "track": annotation.track,
        "mmsi": annotation.mmsi,
        "box": [float(v) for v in annotation.box],
        "ais": annotation.ais,
        "prov": annotation.provenance,
        "predicted": annotation.predicted,
    }


def write_annotations(annotations, stream):
    for annotation in annotations:
        stream.write(json.dumps(annotation_to_json(annotation)) + "\n")


def read_annotations(path):
    annotations = []

    for line, data in _json_lines(path):
        try:
            annotations.append(
                FusedAnnotation(
                    t=float(data["t"]),
                    track=int(data["track"]),
                    box=tuple(float(v) for v in data["box"]),
                    provenance=data["prov"],
                    mmsi=data.get("mmsi"),
                    ais=data.get("ais"),
                    predicted=bool(data.get("predicted", False)),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputFormatError(f"Invalid annotation: {e}", path, line)

    return annotations


def write_report_json(reports, path):
    data = [report.export() for report in reports]

    with open(path, "w") as stream:
        json.dump(data, stream, indent=2)
        stream.write("\n")


def _cell(value, template, scale=1):
    return "" if value is None else template.format(scale * value)


def write_report_csv(reports, path):
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("clip",) + REPORT_COLUMNS)

        for report in reports:
            rates = report.rates()
            percents = [_cell(rates[c], "{:.2f}", 100) for c in REPORT_COLUMNS[:4]]
            values = [_cell(rates[c], "{!r}") for c in REPORT_COLUMNS[4:]]
            writer.writerow([report.clip] + percents + values)


def read_points_csv(path):
    """Reads an ``x,y`` point list (an optional ``t`` column is ignored)."""

    points = []

    with open(path, newline="") as stream:
        for line, row in enumerate(_reader(stream, ("x", "y"), path), start=2):
            x = _number(row, "x", path, line)
            y = _number(row, "y", path, line)
            points.append(PixelPoint(x, y))

    if not points:
        raise InputFormatError("No points", path, 1)

    return points
