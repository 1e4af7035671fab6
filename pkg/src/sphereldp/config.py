# config.py - Settings resolution

"""Resolve numeric settings from flags, environment, a key=value file, and defaults."""

from __future__ import annotations

import logging
import os
from argparse import Namespace
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple

from .ensembles import EIGENSOLVERS
from .errors import ParseError, UsageError

ENV_PREFIX = "SPHERELDP_"
CONFIG_ENV = "SPHERELDP_CONFIG"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigValue(NamedTuple):
    text: str
    line: int


def read_key_value_file(path) -> dict[str, ConfigValue]:
    """
    Read a key=value file.

    Blank lines and lines starting with '#' are skipped; a repeated key keeps its last value.

    Args:
        path: File to read

    Returns:
        Mapping of key to (value text, 1-based line number)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from e

    values: dict[str, ConfigValue] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(path, number, f"expected key = value, got {raw!r}")
        values[key] = ConfigValue(value.strip(), number)
    return values


def _convert(kind: type, name: str, text: str):
    if kind is str:
        return text
    try:
        return kind(text)
    except ValueError as e:
        raise ValueError(f"{name} expects {kind.__name__}, got {text!r}") from e


@dataclass(frozen=True)
class Settings:
    """Numeric settings shared by every command."""

    jacobi_tol: float = 1e-12
    eigensolver: str = "lapack"
    discretization_atoms: int = 2000
    workers: int = 1
    chunk_size: int = 4096
    log_level: str = "WARNING"

    @classmethod
    def resolve(cls, args: Namespace) -> Settings:
        """
        Resolve each field from args, environment, config file, or default.

        Priority:
        1. --<field> flag (attribute of the same name on args)
        2. SPHERELDP_<FIELD> environment variable
        3. key in the --config file (or the file named by SPHERELDP_CONFIG)
        4. built-in default

        Args:
            args: Parsed command-line arguments

        Returns:
            Settings: Validated settings
        """
        config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
        file_values = read_key_value_file(config_path) if config_path else {}

        known = {f.name for f in fields(cls)}
        for key, value in file_values.items():
            if key not in known:
                raise ParseError(config_path, value.line, f"unknown setting {key!r}")

        resolved = {}
        for f in fields(cls):
            kind = type(f.default)
            # 1. flag
            flag = getattr(args, f.name, None)
            if flag is not None:
                resolved[f.name] = flag
                continue

            # 2. environment
            env_name = ENV_PREFIX + f.name.upper()
            env_value = os.environ.get(env_name)
            if env_value:
                try:
                    resolved[f.name] = _convert(kind, f.name, env_value.strip())
                except ValueError as e:
                    raise UsageError(f"{env_name}: {e}") from e
                continue

            # 3. config file
            if f.name in file_values:
                entry = file_values[f.name]
                try:
                    resolved[f.name] = _convert(kind, f.name, entry.text)
                except ValueError as e:
                    raise ParseError(config_path, entry.line, str(e)) from e
                continue

            # 4. default
            resolved[f.name] = f.default

        settings = cls(**resolved)
        settings.validate()
        return settings

    def validate(self) -> None:
        if not self.jacobi_tol > 0:
            raise UsageError(f"jacobi_tol must be positive, got {self.jacobi_tol!r}")
        if self.eigensolver not in EIGENSOLVERS:
            raise UsageError(f"eigensolver must be one of {', '.join(EIGENSOLVERS)}, got {self.eigensolver!r}")
        if self.discretization_atoms < 2:
            raise UsageError("discretization_atoms must be at least 2")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        if self.chunk_size < 1:
            raise UsageError("chunk_size must be at least 1")
        if self.log_level.upper() not in LOG_LEVELS:
            raise UsageError(f"log_level must be one of {', '.join(LOG_LEVELS)}, got {self.log_level!r}")

    @property
    def logging_level(self) -> int:
        return getattr(logging, self.log_level.upper())
