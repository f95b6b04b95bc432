"""
    vesfuse.cli
    ~~~~~~~~~~~

    The ``vesfuse`` command: scene simulation, offline fusion replay,
    evaluation and a DTW debugging utility.
"""

import json
import logging
import math
import os

import click
import numpy as np

from vesfuse import errors
from vesfuse.config import Config
from vesfuse.engine import replay
from vesfuse.formats import (
    ensure_writable,
    read_ais_csv,
    read_annotations,
    read_detections,
    read_gt_csv,
    read_points_csv,
    write_ais_csv,
    write_annotations,
    write_detections,
    write_gt_csv,
    write_report_csv,
    write_report_json,
)
from vesfuse.metrics import FusionReport, evaluate, evaluate_detections
from vesfuse.similarity import SIMILARITIES, direction_angle, dtw_exact, fastdtw
from vesfuse.simulator import (
    LIBRARY,
    emit_ais,
    emit_detections,
    ground_truth,
    load_scenario,
)

logger = logging.getLogger(__name__)

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

#: File names written by ``simulate`` inside the output directory.
AIS_FILE = "ais.csv"
DETECTIONS_FILE = "detections.jsonl"
GT_FILE = "gt.csv"


class Vesfuse(click.Group):
    """Command group that reports registered exceptions as one JSON object
    on stderr and exits with the code chosen by the handler."""

    def __init__(self, *args, **kwargs):
        super(Vesfuse, self).__init__(*args, **kwargs)
        self.error_handler_spec = {}
        errors.init_app(self)

    def errorhandler(self, exc_class):
        def decorator(f):
            self.error_handler_spec[exc_class] = f
            return f

        return decorator

    def find_error_handler(self, e):
        for cls in type(e).__mro__:
            if cls in self.error_handler_spec:
                return self.error_handler_spec[cls]

        return None

    def invoke(self, ctx):
        try:
            return super(Vesfuse, self).invoke(ctx)
        except Exception as e:
            handler = self.find_error_handler(e)

            if handler is None:
                raise

            body, code = handler(e)
            click.echo(json.dumps(body, default=str), err=True)
            ctx.exit(code)


def load_config(path=None, **overrides):
    """The configuration file at ``path`` (or the defaults) with the
    command line ``overrides`` that were given."""

    config = Config.from_file(path) if path else Config()
    return config.update(**{k: v for k, v in overrides.items() if v is not None})


config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="YAML engine configuration.",
)

force_option = click.option("--force", is_flag=True, help="Overwrite existing outputs.")


@click.group(cls=Vesfuse)
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG.")
def cli(verbose):
    """Fusion of AIS reports and video vessel tracks."""

    logging.basicConfig(
        level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
def scenarios():
    """Lists the built-in scenarios."""

    for name in sorted(LIBRARY):
        scenario = LIBRARY[name]()
        click.echo(f"{name}\t{len(scenario.vessels)} vessels\t{scenario.duration} s")


@cli.command()
@click.argument("scenario")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=click.IntRange(min=0), help="Overrides the scenario seed.")
@force_option
def simulate(scenario, out_dir, seed, force):
    """Writes the AIS, detection and ground truth files of SCENARIO, a
    library name or a YAML scenario document."""

    scene = load_scenario(scenario, seed)
    names = (AIS_FILE, DETECTIONS_FILE, GT_FILE)
    paths = [os.path.join(out_dir, name) for name in names]

    for path in paths:
        ensure_writable(path, force)

    os.makedirs(out_dir, exist_ok=True)
    ais_path, detections_path, gt_path = paths

    write_ais_csv(emit_ais(scene), ais_path)
    write_detections(emit_detections(scene), detections_path)
    write_gt_csv(ground_truth(scene), gt_path)

    logger.info("Simulated %s with seed %s into %s", scene.name, scene.seed, out_dir)

    for path in paths:
        click.echo(path)


def timing_summary(durations):
    if not durations:
        return {"ticks": 0, "mean": 0.0, "std": 0.0}

    values = np.asarray(durations)
    return {
        "ticks": len(durations),
        "mean": float(values.mean()),
        "std": float(values.std()),
    }


@cli.command()
@click.argument("ais_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("detections_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@config_option
@click.option("--seed", type=click.IntRange(min=0))
@click.option("--no-anti-occlusion", is_flag=True, help="Plain tracking-by-detection.")
@click.option("--similarity", type=click.Choice(sorted(SIMILARITIES)))
@force_option
def fuse(
    ais_file,
    detections_file,
    out_file,
    config_path,
    seed,
    no_anti_occlusion,
    similarity,
    force,
):
    """Replays AIS_FILE and DETECTIONS_FILE one second at a time and writes
    the fused annotations, plus the tick timing to ``<out>.timing.json``."""

    config = load_config(
        config_path,
        seed=seed,
        similarity=similarity,
        anti_occlusion=False if no_anti_occlusion else None,
    )
    timing_file = out_file + ".timing.json"
    ensure_writable(out_file, force)
    ensure_writable(timing_file, force)

    annotations, durations = replay(
        read_ais_csv(ais_file), read_detections(detections_file), config
    )

    with open(out_file, "w") as stream:
        write_annotations(annotations, stream)

    summary = timing_summary(durations)

    with open(timing_file, "w") as stream:
        json.dump(summary, stream, indent=2)
        stream.write("\n")

    logger.info(
        "Processed %d ticks in %.4f ± %.4f s per tick",
        summary["ticks"],
        summary["mean"],
        summary["std"],
    )


def _clip_name(path):
    return os.path.splitext(os.path.basename(path))[0]


def _percent(value):
    return "n/a" if value is None else f"{100 * value:.2f}"


@cli.command("evaluate")
@click.argument(
    "files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False)
)
@click.option(
    "--out", "out_prefix", required=True, help="Writes <out>.json and <out>.csv."
)
@config_option
@click.option(
    "--clip", "clips", multiple=True, help="Clip names, one per pair of files."
)
@click.option(
    "--detections",
    "detection_files",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Raw detections of the clips, in order, for the detection-only rows.",
)
@force_option
def evaluate_cmd(files, out_prefix, config_path, clips, detection_files, force):
    """Evaluates ANNOTATIONS GT file pairs, one pair per clip."""

    if len(files) % 2:
        raise click.UsageError("Expected ANNOTATIONS GT pairs")

    pairs = list(zip(files[::2], files[1::2]))

    if clips and len(clips) != len(pairs):
        raise click.UsageError("Give one --clip per pair of files")

    if len(detection_files) > len(pairs):
        raise click.UsageError("More --detections than clips")

    config = load_config(config_path)
    json_path, csv_path = out_prefix + ".json", out_prefix + ".csv"
    ensure_writable(json_path, force)
    ensure_writable(csv_path, force)

    reports, detection_reports = [], []

    for k, (annotations_file, gt_file) in enumerate(pairs):
        name = clips[k] if clips else _clip_name(annotations_file)
        gts = read_gt_csv(gt_file)
        reports.append(
            evaluate(
                read_annotations(annotations_file),
                gts,
                config.CAMERA.diagonal,
                config.IOU_THRESHOLD,
                clip=name,
            )
        )

        if k < len(detection_files):
            ticks = read_detections(detection_files[k])
            detections = [box for _, boxes in ticks for box in boxes]
            detection_reports.append(
                evaluate_detections(
                    detections, gts, config.IOU_THRESHOLD, clip=f"{name}/detection"
                )
            )

    rows = reports + [FusionReport.aggregate(reports)] + detection_reports
    write_report_json(rows, json_path)
    write_report_csv(rows, csv_path)

    for report in rows:
        rates = report.rates()
        shown = "  ".join(
            f"{key} {_percent(rates[key])}" for key in ("MOFA", "IDF1", "MOTA")
        )
        click.echo(f"{report.clip}: {shown}")


@cli.command()
@click.argument("series_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("series_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--radius", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--oracle-check", is_flag=True, help="Also runs exact DTW.")
def dtw(series_a, series_b, radius, oracle_check):
    """Compares two ``x,y`` point lists with the direction-aware FastDTW
    score and prints the result as JSON."""

    x, y = read_points_csv(series_a), read_points_csv(series_b)
    distance, path = fastdtw(x, y, radius)
    phi = direction_angle(x, y)
    result = {
        "distance": distance,
        "phi": phi,
        "factor": math.exp(phi),
        "similarity": distance * math.exp(phi),
        "path": [list(pair) for pair in path],
    }

    if oracle_check:
        exact, _ = dtw_exact(x, y)
        result["exact_distance"] = exact
        result["excess"] = distance - exact

    click.echo(json.dumps(result))


def main():
    cli(prog_name="vesfuse")
