"""
Configuration loading module
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic_settings import BaseSettings, SettingsConfigDict


# Configuration file paths
CONFIG_DIR = Path.home() / ".lcextension" / "config"
APPLICATION_CONFIG_FILE = CONFIG_DIR / "application.yaml"

# Shipped defaults, used when the user has no file of their own
PACKAGE_CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


class RuntimeSettings(BaseSettings):
    """Environment overrides (prefix ``LCEXT_``, also read from ``.env``)"""

    model_config = SettingsConfigDict(env_prefix="LCEXT_", env_file=".env", extra="ignore")

    threads: Optional[int] = None
    log_level: Optional[str] = None
    config_file: Optional[str] = None


def ensure_config_dir():
    """Ensure configuration directory exists"""
    CONFIG_DIR.mkdir(parents=True, exist_ok=True)


def load_yaml_config(file_path: Path) -> Dict[str, Any]:
    """
    Load YAML configuration file

    Args:
        file_path: Configuration file path

    Returns:
        Configuration dictionary
    """
    if not file_path.exists():
        return {}

    with open(file_path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def save_yaml_config(file_path: Path, config: Dict[str, Any]) -> None:
    """
    Save YAML configuration file

    Args:
        file_path: Configuration file path
        config: Configuration dictionary
    """
    file_path.parent.mkdir(parents=True, exist_ok=True)

    with open(file_path, "w", encoding="utf-8") as f:
        yaml.dump(config, f, allow_unicode=True, sort_keys=False)


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(file_path: Optional[Path] = None) -> Dict[str, Any]:
    """
    Load the application configuration

    Built-in defaults are overlaid by the shipped ``config/application.yaml``, then by the
    user file (``~/.lcextension/config/application.yaml`` or ``LCEXT_CONFIG_FILE``) and
    finally by an explicit ``file_path``.

    Args:
        file_path: Optional extra YAML file with the highest precedence

    Returns:
        Merged configuration dictionary
    """
    settings = RuntimeSettings()
    shipped = load_yaml_config(PACKAGE_CONFIG_DIR / "application.yaml")
    config = _merge(_get_default_config(), shipped)

    user_file = APPLICATION_CONFIG_FILE
    if settings.config_file:
        user_file = expand_path(settings.config_file)
    config = _merge(config, load_yaml_config(user_file))
    if file_path is not None:
        config = _merge(config, load_yaml_config(file_path))

    if settings.threads is not None:
        config["runtime"]["threads"] = settings.threads
    if settings.log_level:
        config["logging"]["level"] = settings.log_level

    return config


def get_config(key: str, default: Any = None, config: Optional[Dict[str, Any]] = None) -> Any:
    """
    Get configuration value

    Args:
        key: Configuration key (supports dot-separated path like "quadrature.rel_tol")
        default: Default value
        config: Already loaded configuration; loaded afresh when omitted

    Returns:
        Configuration value
    """
    value: Any = load_config() if config is None else config

    for k in key.split("."):
        if isinstance(value, dict) and k in value:
            value = value[k]
        else:
            return default

    return value


def set_config(key: str, value: Any) -> None:
    """
    Set a value in the user configuration file

    Args:
        key: Configuration key (dot-separated)
        value: Configuration value
    """
    ensure_config_dir()
    config = load_yaml_config(APPLICATION_CONFIG_FILE)

    keys = key.split(".")
    target = config
    for k in keys[:-1]:
        if not isinstance(target.get(k), dict):
            target[k] = {}
        target = target[k]
    target[keys[-1]] = value

    save_yaml_config(APPLICATION_CONFIG_FILE, config)


def _get_default_config() -> Dict[str, Any]:
    """
    Get default configuration

    Returns:
        Default configuration dictionary
    """
    return {
        "quadrature": {
            "eps_schedule": [0.2, 0.1, 0.05, 0.025],
            "nodes_per_axis": 24,
            "max_nodes": 96,
            "abs_tol": 1e-6,
            "rel_tol": 2e-3,
            "divergence_threshold": 4.0,
            "quad_rel_tol": None,
        },
        "weights": {
            "grid_points": 2000,
            "t_span_decades": 6.0,
        },
        "estimates": {
            "tolerance_factor": 3.0,
        },
        "runtime": {
            "threads": 1,
        },
        "logging": {
            "level": "INFO",
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "file": str(Path.home() / ".lcextension" / "logs" / "app.log"),
        },
    }


def expand_path(path: str) -> Path:
    """
    Expand path (supports ~ and environment variables)

    Args:
        path: Path string

    Returns:
        Expanded Path object
    """
    return Path(os.path.expanduser(os.path.expandvars(path)))
