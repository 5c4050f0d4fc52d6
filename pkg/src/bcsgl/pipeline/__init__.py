"""Configuration, stage orchestration and export."""

from .config import RunConfig, config_from_dict, parse_config
from .export import canonical_json, export
from .run import STAGES, exit_code, run_pipeline

__all__ = [
    "RunConfig",
    "STAGES",
    "canonical_json",
    "config_from_dict",
    "exit_code",
    "export",
    "parse_config",
    "run_pipeline",
]
