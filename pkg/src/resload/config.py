"""Structured-text (YAML) configuration helpers."""

from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError

BUILTIN_PREFIX = "builtin:"


def data_path(name):
    """Path of a file shipped in the package ``data`` directory."""
    return Path(str(resources.files("resload") / "data" / name))


def resolve_path(path, base=None):
    """Resolve ``builtin:<name>`` references and paths relative to ``base``."""
    text = str(path)
    if text.startswith(BUILTIN_PREFIX):
        return data_path(text[len(BUILTIN_PREFIX):])
    p = Path(text)
    if base is not None and not p.is_absolute():
        p = Path(base) / p
    return p


def load_yaml(path):
    path = resolve_path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error: {problem}", where) from exc


def require_mapping(value, context):
    if not isinstance(value, dict):
        raise ConfigError(f"expected a mapping, got {type(value).__name__}", context)
    return value


def parse_distribution(raw, context):
    """Validate a categorical distribution given as ``{category: probability}``.

    Probabilities must be in [0, 1] and sum to 1 within 1e-9; the returned
    mapping is renormalized exactly. Category keys are converted to ``str``.
    """
    require_mapping(raw, context)
    if not raw:
        raise ConfigError("empty distribution", context)
    out = {}
    for k, v in raw.items():
        try:
            p = float(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"probability for {k!r} is not a number: {v!r}", context) from exc
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"probability for {k!r} outside [0, 1]: {p}", context)
        out[str(k)] = p
    total = sum(out.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"distribution sums to {total:.12g}, expected 1", context)
    return {k: v / total for k, v in out.items()}
