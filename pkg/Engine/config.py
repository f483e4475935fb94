import json
import logging
import os
from enum import Enum
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError

load_dotenv()

logger = logging.getLogger(__name__)

CONFIG_PATH_ENV = "OPSPEC_CONFIG"
ENV_PREFIX = "OPSPEC_"


class ConfigError(ValueError):
    pass


class OutputFormat(str, Enum):
    JSON = "json"
    JSONL = "jsonl"
    DOT = "dot"
    TABLE = "table"


class Settings(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    residual_tol: float = 1e-9
    comparison_slack: float = 1e-8
    strict_margin: float = 1e-10
    certificate_slack: float = 1e-12

    jacobi_max_sweeps: int = 100
    power_max_iter: int = 100000

    canonical_exact_max_n: int = 20
    minor_max_n: int = 12
    cross_check_recognizers: bool = True

    enum_max_n_general: int = 10
    enum_max_n_maximal_2conn: int = 20
    enum_max_results: int = 2_000_000
    naive_max_n: int = 7
    floor_max_n: int = 8
    hamilton_exhaustive_max_n: int = 12

    workers: int = 1
    log_level: str = "INFO"

    def tolerances(self) -> Dict[str, float]:
        return {
            "residual_tol": self.residual_tol,
            "comparison_slack": self.comparison_slack,
            "strict_margin": self.strict_margin,
            "certificate_slack": self.certificate_slack,
        }


def _load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return data


def _env_overrides() -> Dict[str, str]:
    overrides = {}
    for name in Settings.model_fields:
        raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None:
            overrides[name] = raw
    return overrides


def get_settings(config_path: Optional[str] = None) -> Settings:
    values: Dict[str, Any] = {}

    path = config_path or os.getenv(CONFIG_PATH_ENV)
    if path:
        values.update(_load_config_file(path))
        logger.debug(f"Loaded settings file {path}")

    values.update(_env_overrides())

    try:
        return Settings(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid settings: {e}")


def apply_overrides(overrides: Dict[str, Any]) -> Settings:
    """Assign validated overrides onto the shared settings object."""
    for key, value in overrides.items():
        if key not in Settings.model_fields:
            raise ConfigError(f"Unknown setting '{key}'")
        try:
            setattr(settings, key, value)
        except ValidationError as e:
            raise ConfigError(f"Invalid value for {key}: {e}")
    return settings


def reset_settings() -> Settings:
    fresh = Settings()
    for name in Settings.model_fields:
        setattr(settings, name, getattr(fresh, name))
    return settings


settings = get_settings()
