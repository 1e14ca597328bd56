"""Run settings: defaults, key=value config files, environment and flag overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

ENV_PREFIX = "LISTRULES_"


@dataclass
class Thresholds:
    """Rule selection thresholds per consequent kind (all comparisons strict)."""

    type_supp: float = 0
    type_conf: float = 0.85
    type_cons: float = 0.75
    rel_supp: float = 2
    rel_conf: float = 0.80
    rel_cons: float = 0.85


def parse_fraction(text) -> Fraction:
    """Exact rational from ``"1/3"``, ``"0.25"`` or a number."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, float):
        return Fraction(str(text))
    return Fraction(str(text).strip())


@dataclass
class Settings:
    thresholds: Thresholds = field(default_factory=Thresholds)
    tau_tag: Fraction = Fraction(1, 3)
    tau_freq: Optional[float] = None  # baseline threshold; None -> per-kind confidence thresholds
    min_se: int = 3
    bin_width: float = 0.05
    min_rows: int = 2
    max_pattern_size: int = 5
    threads: int = 1
    seed: int = 0
    fallback: str = "shape"

    def manifest(self) -> dict:
        """Effective settings that determine outputs (thread count excluded)."""
        out = dataclasses.asdict(self)
        out.pop("threads")
        out["tau_tag"] = str(self.tau_tag)
        return out


# flat key -> (owner, attribute, parser)
_THRESHOLD_KEYS = {
    "tau_supp_type": "type_supp",
    "tau_conf_type": "type_conf",
    "tau_cons_type": "type_cons",
    "tau_supp_rel": "rel_supp",
    "tau_conf_rel": "rel_conf",
    "tau_cons_rel": "rel_cons",
}
_SETTING_PARSERS = {
    "tau_tag": parse_fraction,
    "tau_freq": float,
    "min_se": int,
    "bin_width": float,
    "min_rows": int,
    "max_pattern_size": int,
    "threads": int,
    "seed": int,
    "fallback": str,
}
KEYS = sorted(set(_THRESHOLD_KEYS) | set(_SETTING_PARSERS) | {"tau_conf", "tau_cons"})


class ConfigError(ValueError):
    pass


def apply(settings: Settings, key: str, value) -> None:
    """Set one flat key; ``tau_conf``/``tau_cons`` set both kinds at once."""
    key = key.strip().lower().replace("-", "_")
    try:
        if key in ("tau_conf", "tau_cons"):
            metric = key.split("_")[1]
            setattr(settings.thresholds, f"type_{metric}", float(value))
            setattr(settings.thresholds, f"rel_{metric}", float(value))
        elif key in _THRESHOLD_KEYS:
            setattr(settings.thresholds, _THRESHOLD_KEYS[key], float(value))
        elif key in _SETTING_PARSERS:
            setattr(settings, key, _SETTING_PARSERS[key](value))
        else:
            raise ConfigError(f"unknown setting {key!r}")
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower()
            if key in KEYS:
                out[key] = value
    return out


def resolve(config_path=None, flags: Optional[dict] = None, environ=None) -> Settings:
    """Defaults < config file < environment < flags."""
    settings = Settings()
    layers = []
    if config_path:
        layers.append(read_config(config_path))
    layers.append(env_overrides(environ))
    layers.append({k: v for k, v in (flags or {}).items() if v is not None})
    for layer in layers:
        for k, v in layer.items():
            apply(settings, k, v)
    return settings


def write_manifest(settings: Settings, path, extra: Optional[dict] = None) -> None:
    data = {"settings": settings.manifest()}
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def setting_names() -> list:
    return [f.name for f in fields(Settings)]
