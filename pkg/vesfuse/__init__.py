# -*- coding: utf-8 -*-

"""Top-level package for vesfuse."""

__author__ = """José María Domínguez Moreno"""
__email__ = "miso.0b11@gmail.com"
__version__ = "0.1.0a0"


from vesfuse.config import Config  # noqa: F401
from vesfuse.engine import FusionEngine, fuse_tick  # noqa: F401
from vesfuse.model import (  # noqa: F401
    AisRecord,
    DetectionBox,
    FusedAnnotation,
    GeoPoint,
)
