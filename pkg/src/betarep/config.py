"""Toolkit configuration file.

A single JSON object; every section and key is optional and unknown keys are
rejected::

    {
      "weights": {"w_visible": 1.0, "w_full": 0.04, "rho": 3.4641, "lam": 0.866},
      "grid": {"resolution": 128, "epsilon_floor": 1e-12},
      "nms": {"strategy": "beta", "iou_threshold": 0.5, "viou_threshold": 0.35,
              "kl_threshold": 7.0, "soft_sigma": 0.5, "soft_score_floor": 0.001,
              "prefilter": true},
      "metrics": {"match_iou": 0.5, "kl_thresholds": [6.0, 7.0]},
      "threads": 1
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace

from .core import WeightConfig
from .divergence import GridSpec
from .nms import NmsConfig

ENV_VAR = "BETAREP_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MetricOptions:
    match_iou: float = 0.5
    kl_thresholds: tuple[float, ...] = (6.0, 7.0)

    def __post_init__(self):
        if not 0.0 < self.match_iou <= 1.0:
            raise ValueError("match_iou must lie in (0, 1]")
        object.__setattr__(self, "kl_thresholds", tuple(float(t) for t in self.kl_thresholds))


@dataclass(frozen=True)
class ToolkitConfig:
    weights: WeightConfig = field(default_factory=WeightConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    nms: NmsConfig = field(default_factory=NmsConfig)
    metrics: MetricOptions = field(default_factory=MetricOptions)
    threads: int = 1

    def nms_config(self, **overrides) -> NmsConfig:
        return replace(self.nms, grid=self.grid, weights=self.weights, **overrides)

    def as_dict(self) -> dict:
        nms = {k: v for k, v in asdict(self.nms).items() if k not in ("grid", "weights")}
        return {
            "weights": asdict(self.weights),
            "grid": asdict(self.grid),
            "nms": nms,
            "metrics": {"match_iou": self.metrics.match_iou, "kl_thresholds": list(self.metrics.kl_thresholds)},
            "threads": self.threads,
        }


def _section(cls, data, name, exclude=()):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)} - set(exclude)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from exc


def config_from_dict(data: dict) -> ToolkitConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - {"weights", "grid", "nms", "metrics", "threads"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    weights = _section(WeightConfig, data.get("weights", {}), "weights")
    grid = _section(GridSpec, data.get("grid", {}), "grid")
    nms = _section(NmsConfig, data.get("nms", {}), "nms", exclude=("grid", "weights"))
    metrics = _section(MetricOptions, data.get("metrics", {}), "metrics")
    threads = data.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    return ToolkitConfig(weights, grid, replace(nms, grid=grid, weights=weights), metrics, threads)


def load_config(path: str | None = None) -> ToolkitConfig:
    """Read ``path``, else the file named by ``$BETAREP_CONFIG``, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return ToolkitConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc.msg})") from exc
    return config_from_dict(data)
