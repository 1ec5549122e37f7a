"""Run configuration: one JSON document, strict keys, flags override."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

NETWORK_MODES = ("consecutive", "covisitation")
CENSUS_MODES = ("trajectory", "enumerate")
WEIGHTING_MODES = ("devices", "instances")


def default_threads() -> int:
    return os.cpu_count() or 1


@dataclass
class RunConfig:
    min_dwell: int = 300
    utc_offset: float = 0.0
    network_mode: str = "consecutive"
    census_mode: str = "trajectory"
    distance_weighting: str = "devices"
    top_k: int = 10
    seed: int = 0
    threads: int = field(default_factory=default_threads)
    stops: str | None = None
    pois: str | None = None
    out: str | None = None

    def validate(self) -> None:
        problems = []
        if self.min_dwell < 0:
            problems.append(f"min_dwell must be >= 0, got {self.min_dwell}")
        if self.network_mode not in NETWORK_MODES:
            problems.append(f"network_mode must be one of {NETWORK_MODES}, got {self.network_mode!r}")
        if self.census_mode not in CENSUS_MODES:
            problems.append(f"census_mode must be one of {CENSUS_MODES}, got {self.census_mode!r}")
        if self.distance_weighting not in WEIGHTING_MODES:
            problems.append(
                f"distance_weighting must be one of {WEIGHTING_MODES}, got {self.distance_weighting!r}"
            )
        if self.top_k < 1:
            problems.append(f"top_k must be >= 1, got {self.top_k}")
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")
        if problems:
            raise ConfigError("; ".join(problems))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def analysis_dict(self) -> dict:
        """The parameters that shape results; excludes I/O paths and thread
        count so identical analyses yield identical reports."""
        keys = (
            "min_dwell",
            "utc_offset",
            "network_mode",
            "census_mode",
            "distance_weighting",
            "top_k",
            "seed",
        )
        return {k: getattr(self, k) for k in keys}

    def with_overrides(self, **overrides) -> "RunConfig":
        updates = {k: v for k, v in overrides.items() if v is not None}
        cfg = replace(self, **updates)
        cfg.validate()
        return cfg


def validate_config(path: str | Path | None) -> RunConfig:
    """Load a config file, applying defaults; unknown keys are rejected."""
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    coerced = {}
    problems = []
    casts = {
        "min_dwell": int,
        "utc_offset": float,
        "top_k": int,
        "seed": int,
        "threads": int,
    }
    for key, value in doc.items():
        cast = casts.get(key)
        if cast is not None:
            try:
                coerced[key] = cast(value)
            except (TypeError, ValueError):
                problems.append(f"{key} must be a number, got {value!r}")
        elif value is not None and not isinstance(value, str):
            problems.append(f"{key} must be a string, got {value!r}")
        else:
            coerced[key] = value
    if problems:
        raise ConfigError("; ".join(problems))
    cfg = RunConfig(**coerced)
    cfg.validate()
    return cfg
