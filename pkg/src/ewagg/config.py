"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored; inline ``#`` starts a
comment.  Values stay strings until a typed getter reads them.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigurationError


class FlatConfig(dict):
    def get_float(self, key: str, default=None):
        if key not in self:
            return default
        try:
            return float(self[key])
        except ValueError:
            raise ConfigurationError(f"{key} must be a number, got {self[key]!r}") from None

    def get_int(self, key: str, default=None):
        if key not in self:
            return default
        try:
            return int(self[key])
        except ValueError:
            raise ConfigurationError(f"{key} must be an integer, got {self[key]!r}") from None

    def get_bool(self, key: str, default: bool = False) -> bool:
        if key not in self:
            return default
        v = self[key].strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{key} must be a boolean, got {self[key]!r}")

    def get_floats(self, key: str, default=None):
        if key not in self:
            return default
        try:
            return [float(x) for x in self[key].split(",") if x.strip()]
        except ValueError:
            raise ConfigurationError(f"{key} must be a comma separated list of numbers") from None


def parse_config(text: str) -> FlatConfig:
    out = FlatConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def load_config(path) -> FlatConfig:
    return parse_config(Path(path).read_text())
