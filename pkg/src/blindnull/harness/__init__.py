from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .runner import run_learn, run_sweep, run_validate

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_text", "run_learn", "run_sweep", "run_validate"]
