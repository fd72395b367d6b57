"""
Configuration loading for phonest.

- Loads runtime settings from config.yaml (or config.local.yaml)
- Allows env var overrides (PHONEST_*)
- Validates run/arch/corpus/manifest files against their pydantic models
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from numcore.errors import ParameterError, ParseError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

ModelT = TypeVar("ModelT", bound=BaseModel)


class ConfigLoader:
    """Load config from YAML and optionally override with env vars."""

    def __init__(self, config_path: str = "config.yaml", required: bool = True) -> None:
        self.config_path = Path(config_path)
        self.required = required
        self._config: Dict[str, Any] = {}
        self._load_config()

    def _load_config(self) -> None:
        if not self.config_path.exists():
            if self.required:
                raise FileNotFoundError(
                    f"Config file not found: {self.config_path}\n"
                    f"Copy config.example.yaml to config.yaml and adjust it."
                )
            logger.debug("No config file at %s; using built-in defaults", self.config_path)
            self._config = {}
            return
        try:
            with self.config_path.open("r", encoding="utf-8") as handle:
                self._config = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise ParseError(f"Invalid YAML: {exc}", str(self.config_path)) from exc

    def get(self, key: str, default: Any = None) -> Any:
        keys = key.split(".")
        value: Any = self._config
        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def get_with_env(self, key: str, env_var: str, default: Any = None) -> Any:
        env_value = os.getenv(env_var)
        if env_value is not None:
            return env_value
        config_value = self.get(key)
        if config_value is not None:
            return config_value
        return default

    def get_required(self, key: str, env_var: Optional[str] = None) -> Any:
        value = self.get_with_env(key, env_var) if env_var else self.get(key)
        if value is None:
            source = f"config key '{key}'"
            if env_var:
                source += f" or env var '{env_var}'"
            raise ParameterError(f"Required configuration value missing: {source}")
        return value

    def get_section(self, section: str) -> Dict[str, Any]:
        return self.get(section, {}) or {}


_config_instance: Optional[ConfigLoader] = None


def get_config(config_path: str = "config.yaml") -> ConfigLoader:
    global _config_instance
    if _config_instance is None:
        effective_path = config_path
        required = config_path != "config.yaml"
        if config_path == "config.yaml":
            local_path = Path("config.local.yaml")
            if local_path.exists():
                effective_path = str(local_path)
        _config_instance = ConfigLoader(effective_path, required=required)
    return _config_instance


def reload_config() -> None:
    global _config_instance
    if _config_instance is not None:
        _config_instance._load_config()


# ---- Typed accessors ----

def get_logging_config() -> Dict[str, Any]:
    config = get_config()
    return {
        "level": config.get_with_env("logging.level", "PHONEST_LOG_LEVEL", "INFO"),
        "loggers": config.get("logging.loggers", {}) or {},
    }


def get_paths_config() -> Dict[str, Any]:
    config = get_config()
    return {
        "corpus_dir": config.get_with_env("paths.corpus_dir", "PHONEST_CORPUS_DIR", "data/corpus"),
        "models_dir": config.get_with_env("paths.models_dir", "PHONEST_MODELS_DIR", "models"),
        "experiments_dir": config.get_with_env("paths.experiments_dir", "PHONEST_EXPERIMENTS_DIR", "experiments"),
    }


def get_runtime_defaults() -> Dict[str, Any]:
    config = get_config()
    return {
        "workers": int(config.get_with_env("runtime.workers", "PHONEST_WORKERS", 1)),
        "decode_workers": int(config.get("runtime.decode_workers", 1)),
    }


# ---- Schema-checked files ----

def read_structured_file(path: Path) -> Dict[str, Any]:
    """Read a JSON or YAML mapping."""
    path = Path(path)
    if not path.exists():
        raise ParseError("config file not found", str(path))
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}", str(path)) from exc
    if not isinstance(data, dict):
        raise ParseError("expected a mapping at the top level", str(path))
    return data


def parse_model(model_cls: Type[ModelT], data: Dict[str, Any], source: str = "config") -> ModelT:
    """Validate a mapping against a pydantic model; failures become ParameterError."""
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParameterError(f"{source}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        return model_cls.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
        )
        raise ParameterError(f"{source}: {problems}") from exc


def load_model_file(model_cls: Type[ModelT], path: Path, overrides: Optional[Dict[str, Any]] = None) -> ModelT:
    data = read_structured_file(path)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return parse_model(model_cls, data, str(path))


def write_model_file(model: BaseModel, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
