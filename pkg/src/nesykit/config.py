"""Run configuration: defaults, JSON config files, environment interpolation.

Precedence is command line over config file over built-in defaults.
String values in the file may reference environment variables as
``${NAME}`` (the whole variable must exist; unset is an error), which
keeps API keys out of checked-in configs.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class ConfigError(ValueError):
    """Bad configuration: unknown key, unset variable, unusable value."""


@dataclass(frozen=True)
class RunConfig:
    endpoint: str = "stub:faithful"
    model: str = ""
    api_key: str | None = None
    conditions: tuple[str, ...] = ("repair_3shot",)
    solver: str = "auto"
    solver_timeout: float = 30.0
    max_repairs: int = 1
    workers: int = 4
    temperature: float = 0.0
    max_tokens: int | None = None
    z: float = 3.0
    examples: str | None = None
    patterns: str | None = None
    save_smt: bool = False

    def to_json(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model": self.model,
            "api_key": "***" if self.api_key else None,
            "conditions": list(self.conditions),
            "solver": self.solver,
            "solver_timeout": self.solver_timeout,
            "max_repairs": self.max_repairs,
            "workers": self.workers,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "z": self.z,
            "examples": self.examples,
            "patterns": self.patterns,
            "save_smt": self.save_smt,
        }


def interpolate_env(value):
    """Expand ``${NAME}`` references in strings, recursively in containers."""
    if isinstance(value, str):

        def lookup(match: re.Match[str]) -> str:
            name = match.group(1)
            if name not in os.environ:
                raise ConfigError(f"config references unset environment variable {name}")
            return os.environ[name]

        return _ENV_RE.sub(lookup, value)
    if isinstance(value, list):
        return [interpolate_env(item) for item in value]
    if isinstance(value, dict):
        return {key: interpolate_env(item) for key, item in value.items()}
    return value


def build_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Layer defaults, then the config file, then non-None overrides."""
    known = {f.name for f in fields(RunConfig)}
    merged: dict = {}

    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {unknown}")
        merged.update(interpolate_env(raw))

    for key, value in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config override: {key}")
        if value is not None:
            merged[key] = value

    if "conditions" in merged:
        merged["conditions"] = tuple(merged["conditions"])
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
