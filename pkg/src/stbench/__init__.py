"""stbench: an application-centric benchmark suite for spatiotemporal databases."""

from .model import (
    Dataset,
    DatasetSummary,
    Point2D,
    Region,
    TimeInterval,
    Trajectory,
    TrajectoryPoint,
    Violation,
    summarize,
    validate_dataset,
)
from .datagen import DataGenConfig, export_dataset, generate_dataset, import_dataset

__version__ = "0.1.0"
