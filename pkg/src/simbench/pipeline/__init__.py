from .config import RunConfig, load_config, parse_config, validate_config
from .stages import RunDirectory, run_all, run_stage

__all__ = [
    "RunConfig",
    "RunDirectory",
    "load_config",
    "parse_config",
    "run_all",
    "run_stage",
    "validate_config",
]
