"""Flat ``key = value`` configuration files.

Presets ship as config files (not hardcoded logic) so hyperparameter
variations are plain text edits.  Keys mirror the hyperparameter symbol
names; ``#`` starts a comment.
"""

from __future__ import annotations


class ConfigError(ValueError):
    pass


_REQUIRED = object()


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


class ConfigView:
    """Typed access over the raw string dict; tracks which keys were read."""

    def __init__(self, raw: dict, source: str = "<config>"):
        self.raw = raw
        self.source = source
        self.used: set = set()

    def has(self, key) -> bool:
        return key in self.raw

    def _get(self, key, default):
        self.used.add(key)
        if key not in self.raw:
            if default is _REQUIRED:
                raise ConfigError(f"{self.source}: missing required key {key!r}")
            return default
        return self.raw[key]

    def _convert(self, key, value, conv, what):
        try:
            return conv(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{self.source}: {key} must be {what}") from exc

    def str(self, key, default=_REQUIRED):
        return self._get(key, default)

    def int(self, key, default=_REQUIRED):
        v = self._get(key, default)
        return self._convert(key, v, int, "an integer") if isinstance(v, str) else v

    def float(self, key, default=_REQUIRED):
        v = self._get(key, default)
        return self._convert(key, v, float, "a number") if isinstance(v, str) else v

    def bool(self, key, default=_REQUIRED):
        v = self._get(key, default)
        if not isinstance(v, str):
            return v
        low = v.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{self.source}: {key} must be a boolean")

    def ints(self, key, default=_REQUIRED):
        v = self._get(key, default)
        if not isinstance(v, str):
            return v
        return tuple(self._convert(key, p.strip(), int, "a list of integers")
                     for p in v.split(",") if p.strip())

    def strs(self, key, default=_REQUIRED):
        v = self._get(key, default)
        if not isinstance(v, str):
            return v
        return tuple(p.strip() for p in v.split(",") if p.strip())

    def unknown_keys(self) -> list:
        return sorted(k for k in self.raw if k not in self.used)
