"""Flat ``key = value`` config files and ``PURECAV_*`` environment overrides.

Keys are CLI flag names with or without the leading dashes; ``-`` and ``_``
are interchangeable. Lines starting with ``#`` and blank lines are ignored.
Precedence, lowest first: built-in defaults, config file, environment,
command-line flags.
"""
from __future__ import annotations

import os
from pathlib import Path

ENV_PREFIX = "PURECAV_"


class ConfigError(ValueError):
    pass


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_").lower()


def read_config(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[normalize_key(key)] = value.strip()
    return values


def env_overrides(environ=None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    return {
        normalize_key(k[len(ENV_PREFIX):]): v
        for k, v in environ.items()
        if k.startswith(ENV_PREFIX) and k != ENV_PREFIX + "CONFIG"
    }


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")
