import numpy as np
import pytest
from click.testing import CliRunner

from vesfuse.config import Config, default_camera
from vesfuse.formats import write_ais_csv, write_detections, write_gt_csv
from vesfuse.simulator import crossing, emit_ais, emit_detections, ground_truth


from assertions import pytest_assertrepr_compare  # noqa: F401


slow = pytest.mark.slow


@pytest.fixture
def config():
    return Config()


@pytest.fixture
def cam():
    return default_camera()


@pytest.fixture
def rng():
    """A fixed-seed generator, so random inputs do not depend on the
    random test order."""

    return np.random.default_rng(20231114)


@pytest.fixture
def runner():
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        # Newer click versions always keep stderr apart.
        return CliRunner()


@pytest.fixture(scope="session")
def crossing_scene():
    return crossing(seed=3)


@pytest.fixture
def crossing_files(crossing_scene, tmp_path):
    """The simulated inputs of the crossing scene written to a temporary
    directory."""

    paths = {
        "ais": str(tmp_path / "ais.csv"),
        "detections": str(tmp_path / "detections.jsonl"),
        "gt": str(tmp_path / "gt.csv"),
    }

    write_ais_csv(emit_ais(crossing_scene), paths["ais"])
    write_detections(emit_detections(crossing_scene), paths["detections"])
    write_gt_csv(ground_truth(crossing_scene), paths["gt"])

    return paths
