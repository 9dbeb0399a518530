"""Flat ``key = value`` configuration files.

Lines starting with ``#`` are comments; a ``.meta`` sidecar written by the
CLI is itself a valid config file.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Mapping


class ConfigError(ValueError):
    pass


def parse_text(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {line!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load(path) -> dict[str, str]:
    try:
        return parse_text(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _to_float(s: str) -> float:
    if s.lower() in ("inf", "unbounded", "infinity"):
        return math.inf
    return float(s)


def _to_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _to_floats(s: str) -> list[float]:
    return [_to_float(p) for p in s.split(",") if p.strip()]


def _to_strs(s: str) -> list[str]:
    return [p.strip() for p in s.split(",") if p.strip()]


def _to_pairs(s: str) -> list[tuple[float, float]]:
    pairs = []
    for item in s.split(";"):
        item = item.strip()
        if not item:
            continue
        a, b = item.split(":")
        pairs.append((float(a), float(b)))
    return pairs


CONVERTERS = {
    float: _to_float,
    int: int,
    str: str,
    bool: _to_bool,
    "floats": _to_floats,
    "strs": _to_strs,
    "pairs": _to_pairs,
}


def resolve(schema: Mapping[str, tuple], raw: Mapping[str, str],
            ignore=("command",)) -> dict[str, Any]:
    """Merge ``raw`` string values over a schema of ``key: (type, default)``."""
    unknown = sorted(set(raw) - set(schema) - set(ignore))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    out = {}
    for key, (typ, default) in schema.items():
        if key in raw:
            try:
                out[key] = CONVERTERS[typ](raw[key])
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({e})") from e
        else:
            out[key] = default
    return out


def format_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return "inf" if math.isinf(val) else repr(val)
    if isinstance(val, (list, tuple)):
        if val and isinstance(val[0], tuple):
            return ";".join(f"{a!r}:{b!r}" for a, b in val)
        return ",".join(format_value(v) for v in val)
    return str(val)
