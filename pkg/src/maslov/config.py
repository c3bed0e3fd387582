"""Strict configuration parsing: TOML in, unknown keys rejected by name.

Every run is described by a flat-ish TOML tree; command-line flags override
file values.  The schema is deliberately strict: an unknown key anywhere in
the tree fails parsing with the offending key path, and numeric knobs are
range-checked here so the numerical modules can assume sane inputs.
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:                      # python < 3.11
    import tomli as tomllib

from .errors import ConfigError

SCHEMA_VERSION = "1"


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


_POTENTIAL_SCHEMA = {
    "kind": (str, None),
    "value": ((int, float, list), None),
    "m": (int, _positive),
    "modes": (list, None),
    "xs": (list, None),
    "values": (list, None),
}

_BAND_SCHEMA = {
    "n": (int, _positive),
    "basis_vectors": (list, None),
    "theta": (list, None),
    "potential": {"fourier_modes": (list, None)},
}

_COMMON = {
    "out": (str, None),
    "plot": (bool, None),
    "angle_tol": (float, _positive),
}

SCHEMAS = {
    "path": {
        **_COMMON,
        "planes": (str, None),
        "reference": (str, None),
    },
    "verify-periodic-1d": {
        **_COMMON,
        "potential": _POTENTIAL_SCHEMA,
        "theta1": ((int, float), None),
        "theta2": ((int, float), None),
        "oracle_grid": (int, lambda n: n >= 200),
        "eig_count": (int, _positive),
        "ode_steps": (int, lambda n: n >= 64),
    },
    "verify-robin-1d": {
        **_COMMON,
        "potential": _POTENTIAL_SCHEMA,
        "theta1": ((int, float), None),
        "theta2": ((int, float), None),
        "oracle_grid": (int, lambda n: n >= 200),
        "eig_count": (int, _positive),
        "ode_steps": (int, lambda n: n >= 64),
        "scan_points": (int, lambda n: n >= 3),
        "scan_grid": (int, lambda n: n >= 200),
    },
    "square": {
        **_COMMON,
        "family": (str, None),
        "potential": _POTENTIAL_SCHEMA,
        "theta1": ((int, float), None),
        "theta2": ((int, float), None),
        "lambda_inf": ((int, float, str), None),
        "oracle_grid": (int, lambda n: n >= 200),
        "eig_count": (int, _positive),
        "ode_steps": (int, lambda n: n >= 64),
        "check_loop": (bool, None),
    },
    "band": {
        **_COMMON,
        "cell": _BAND_SCHEMA,
        "cutoff": (int, _positive),
        "tau": ((int, float), lambda x: 0 < x < 1),
        "t_points": (int, lambda n: n >= 2),
        "verify_y19": (bool, None),
        "check_stride": (int, _positive),
    },
    "flow": {
        **_COMMON,
        "family": (str, None),
        "potential": _POTENTIAL_SCHEMA,
        "theta1": ((int, float), None),
        "theta2": ((int, float), None),
        "band": _BAND_SCHEMA,
        "tau": ((int, float), lambda x: 0 < x < 1),
        "cutoff": (int, _positive),
        "track_points": (int, lambda n: n >= 2),
        "oracle_grid": (int, lambda n: n >= 200),
        "eig_count": (int, _positive),
        "ode_steps": (int, lambda n: n >= 64),
        "check_truncation": (bool, None),
        "check_stride": (int, _positive),
    },
}


def validate(cfg, schema, path=""):
    """Recursively check ``cfg`` against ``schema``; unknown keys are fatal."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"expected a table at '{path or '.'}'")
    for key, value in cfg.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key '{here}'")
        rule = schema[key]
        if isinstance(rule, dict):
            validate(value, rule, here)
            continue
        types, check = rule
        if isinstance(value, bool) and types is not bool and bool not in (
                types if isinstance(types, tuple) else (types,)):
            raise ConfigError(f"config key '{here}' has wrong type bool")
        if not isinstance(value, types):
            raise ConfigError(
                f"config key '{here}' has wrong type {type(value).__name__}")
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            if not math.isfinite(value):
                raise ConfigError(f"config key '{here}' is not finite")
        if check is not None and isinstance(value, (int, float)) \
                and not isinstance(value, bool) and not check(value):
            raise ConfigError(f"config key '{here}' = {value} out of range")
    return cfg


def load_config(path, command):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return validate(data, SCHEMAS[command])


def merge(cfg, overrides):
    """File values overlaid by CLI flags (None entries are 'not given')."""
    out = dict(cfg)
    for key, value in overrides.items():
        if value is not None:
            out[key] = value
    return out


def _toml_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError("non-finite number cannot be serialized")
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize {type(value).__name__} to TOML")


def emit_toml(cfg, prefix=""):
    """Minimal TOML writer for the config trees this package produces.

    Supports scalars, homogeneous lists, nested tables, and arrays of
    tables; round-trips through the strict parser.
    """
    lines = []
    tables = []
    for key, value in cfg.items():
        if isinstance(value, dict):
            tables.append((key, value))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_toml_scalar(value)}")
    for key, value in tables:
        full = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            lines.append(f"\n[{full}]")
            lines.append(emit_toml(value, full))
        else:
            for item in value:
                lines.append(f"\n[[{full}]]")
                lines.append(emit_toml(item, full))
    return "\n".join(lines).strip() + "\n"
