"""
Configuration management for approxcomp.

This module handles loading, validation, and management of configuration
from JSON files.
"""

import json
import os
from pathlib import Path
from typing import Dict, Any, Optional, Union

import jsonschema
from jsonschema import validate

from .utils.exceptions import ConfigurationError

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / 'config' / 'default_config.json'


class Config:
    """
    Configuration manager for approxcomp.

    Handles loading configuration from JSON files, validation against schema,
    and providing access to configuration values throughout the package.
    """

    def __init__(self, config_path: Union[str, Path, None] = None):
        """
        Initialize configuration manager.

        Args:
            config_path: Path to configuration JSON file (defaults to the
                packaged config/default_config.json)

        Note:
            Configuration is loaded lazily on first access to avoid import-time issues
        """
        self.config_path = str(config_path or DEFAULT_CONFIG_PATH)
        self._config_data = None
        self._loaded = False

    def _ensure_loaded(self):
        """Ensure configuration is loaded (lazy loading)."""
        if not self._loaded:
            self._config_data = {}
            self._load_config()
            self._validate_config()
            self._loaded = True

    def load(self) -> 'Config':
        """Load eagerly so that errors surface at startup."""
        self._ensure_loaded()
        return self

    def _load_config(self):
        """Load configuration from JSON file."""
        if not os.path.exists(self.config_path):
            raise ConfigurationError(f"Configuration file not found: {self.config_path}")
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                self._config_data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in configuration file: {e}")
        except OSError as e:
            raise ConfigurationError(f"Error loading configuration: {e}")

    def _validate_config(self):
        """Validate configuration against schema."""
        schema = self._get_config_schema()
        try:
            validate(instance=self._config_data, schema=schema)
        except jsonschema.ValidationError as e:
            location = '.'.join(str(p) for p in e.absolute_path) or '<root>'
            raise ConfigurationError(f"Configuration validation failed at {location}: {e.message}")

    def _get_config_schema(self) -> Dict[str, Any]:
        """
        Get JSON schema for configuration validation.

        Returns:
            Configuration validation schema
        """
        integer = {"type": "integer"}
        number = {"type": "number"}
        return {
            "type": "object",
            "properties": {
                "comparator": {
                    "type": "object",
                    "properties": {
                        "q": integer,
                        "k": integer,
                        "epsilon": number,
                        "max_samples": integer,
                        "tmax": integer,
                        "pmax": integer,
                        "fd_step": number,
                        "zero_tol": number,
                        "bisect_tol": number,
                        "zero_samples": integer,
                        "max_roots": integer,
                        "skip_cap": integer,
                        "flat_cap": integer,
                        "bisect_max_iter": integer,
                        "overflow_log_ratio": number
                    },
                    "additionalProperties": False
                },
                "composer": {
                    "type": "object",
                    "properties": {
                        "max_formula_depth": {"type": "integer", "minimum": 1}
                    }
                },
                "refine": {
                    "type": "object",
                    "properties": {
                        "samples_factor": {"type": "integer", "minimum": 1},
                        "epsilon_divisor": {"type": "number", "exclusiveMinimum": 0}
                    }
                },
                "logging": {
                    "type": "object",
                    "properties": {
                        "level": {"enum": ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]},
                        "file_path": {"type": ["string", "null"]},
                        "console": {"type": "boolean"}
                    }
                },
                "output": {
                    "type": "object",
                    "properties": {
                        "indent": {"type": "integer", "minimum": 0}
                    }
                }
            },
            "required": ["comparator"]
        }

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by key path.

        Args:
            key: Configuration key path (e.g., 'comparator.q')
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        self._ensure_loaded()
        value = self._config_data

        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def get_comparator_config(self) -> Dict[str, Any]:
        """Get comparator configuration section."""
        return self.get('comparator', {})

    def get_composer_config(self) -> Dict[str, Any]:
        """Get composer configuration section."""
        return self.get('composer', {})

    def get_refine_config(self) -> Dict[str, Any]:
        """Get refine configuration section."""
        return self.get('refine', {})

    def get_logging_config(self) -> Dict[str, Any]:
        """Get logging configuration section."""
        return self.get('logging', {})

    def get_output_config(self) -> Dict[str, Any]:
        """Get output configuration section."""
        return self.get('output', {})

    def update(self, key: str, value: Any):
        """
        Update configuration value.

        Args:
            key: Configuration key path
            value: New value to set
        """
        self._ensure_loaded()
        keys = key.split('.')
        config = self._config_data

        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def save(self, output_path: Optional[str] = None):
        """
        Save current configuration to file.

        Args:
            output_path: Path to save configuration (defaults to original path)
        """
        self._ensure_loaded()
        save_path = output_path or self.config_path

        try:
            with open(save_path, 'w', encoding='utf-8') as f:
                json.dump(self._config_data, f, indent=2, ensure_ascii=False)
        except OSError as e:
            raise ConfigurationError(f"Error saving configuration: {e}")

    def to_dict(self) -> Dict[str, Any]:
        """
        Get configuration as dictionary.

        Returns:
            Complete configuration dictionary
        """
        self._ensure_loaded()
        return json.loads(json.dumps(self._config_data))

    def __str__(self) -> str:
        """String representation of configuration."""
        self._ensure_loaded()
        return f"Config(path='{self.config_path}', sections={list(self._config_data.keys())})"

    def __repr__(self) -> str:
        """Detailed string representation."""
        return self.__str__()
