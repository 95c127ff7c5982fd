"""Experiment orchestration: reproducible replica runs, streaming
estimators, tail fits, JSONL persistence, and the command line interface.
"""

from .config import ExperimentConfig, load_config
from .stats import EstimatorSummary, wilson_interval
from .records import ResultRecord, read_records, write_records
from .fits import tail_fit

__all__ = [
    "ExperimentConfig",
    "load_config",
    "EstimatorSummary",
    "wilson_interval",
    "ResultRecord",
    "read_records",
    "write_records",
    "tail_fit",
]
