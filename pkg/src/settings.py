"""
Settings - Configuration from config/config.yaml, .env and environment variables
"""
import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv

from src.errors import InputError

logger = logging.getLogger(__name__)

CONFIG_PATH = Path(__file__).parent.parent / "config" / "config.yaml"

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "logging": {"level": "INFO"},
    "oracle": {"enumeration_cap": 1_000_000},
    "threeway": {"chance_cap": 100_000},
    "estimation": {
        "ridge": 1e-8,
        "bootstrap_resamples": 200,
        "n_jobs": 1,
        "low_support_visits": 10,
        "max_design_columns": 4096,
    },
    "cli": {"exact_node_limit": 200_000},
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# environment variable -> (section, key, type)
ENV_OVERRIDES = {
    "VARDECOMP_LOG_LEVEL": ("logging", "level", str),
    "VARDECOMP_N_JOBS": ("estimation", "n_jobs", int),
    "VARDECOMP_ENUMERATION_CAP": ("oracle", "enumeration_cap", int),
    "VARDECOMP_CHANCE_CAP": ("threeway", "chance_cap", int),
    "VARDECOMP_BOOTSTRAP_RESAMPLES": ("estimation", "bootstrap_resamples", int),
}


def load_config(config_path: Optional[Union[str, Path]] = None) -> Dict[str, Dict[str, Any]]:
    """
    Load configuration: built-in defaults, then config.yaml, then environment variables

    A missing config file is not an error; the defaults apply.
    """
    load_dotenv()
    config = copy.deepcopy(DEFAULTS)

    path = Path(config_path) if config_path else CONFIG_PATH
    if path.exists():
        with open(path, "r") as f:
            file_config = yaml.safe_load(f) or {}
        if not isinstance(file_config, dict):
            raise InputError(f"config file {path} must hold a mapping")
        for section, values in file_config.items():
            if isinstance(values, dict):
                config.setdefault(section, {}).update(values)
    else:
        logger.debug(f"No config file at {path}, using defaults")

    for variable, (section, key, cast) in ENV_OVERRIDES.items():
        raw = os.getenv(variable)
        if raw is None or raw == "":
            continue
        try:
            config[section][key] = cast(raw)
        except ValueError:
            raise InputError(f"environment variable {variable}={raw!r} is not a valid {cast.__name__}")

    level = str(config["logging"]["level"]).upper()
    if level not in LOG_LEVELS:
        raise InputError(f"unknown log level {config['logging']['level']!r} "
                         f"(expected one of {', '.join(LOG_LEVELS)})")
    config["logging"]["level"] = level
    return config
