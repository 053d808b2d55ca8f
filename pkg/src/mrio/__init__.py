"""Multi-radar inertial odometry with a bias-aware two-stage EKF."""

from .config import Config, load_config, parse_config
from .errors import DataError, MrioError
from .metrics import MetricsReport, evaluate
from .pipeline import PipelineResult, run_pipeline
from .simulator import simulate

__all__ = [
    "Config",
    "DataError",
    "MetricsReport",
    "MrioError",
    "PipelineResult",
    "evaluate",
    "load_config",
    "parse_config",
    "run_pipeline",
    "simulate",
]
