"""UTF-8 key=value configuration files with CLI-flag overrides.

Each subcommand declares its schema: the allowed keys, their parsers and
which are required. Unknown keys are rejected by name; missing required
keys are reported with the subcommand they belong to.
"""

from __future__ import annotations

import numpy as np


class ConfigError(ValueError):
    pass


def parse_vec3(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"expected 3 comma-separated values, got {text!r}")
    return np.array(parts)


def parse_ivec3(text):
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"expected 3 comma-separated integers, got {text!r}")
    return tuple(parts)


def parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def read_config_file(path):
    pairs = {}
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


def resolve(subcommand, schema, file_pairs, override_pairs):
    """Merge file values and overrides against a schema.

    schema: {key: (parser, default-or-REQUIRED)}.
    """
    merged = dict(file_pairs)
    merged.update(override_pairs)
    out = {}
    for key, raw in merged.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for subcommand {subcommand!r}")
        parser = schema[key][0]
        try:
            out[key] = parser(raw)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})")
    for key, (_, default) in schema.items():
        if key not in out:
            if default is REQUIRED:
                raise ConfigError(
                    f"subcommand {subcommand!r} is missing required key {key!r}")
            out[key] = default
    return out


REQUIRED = object()
