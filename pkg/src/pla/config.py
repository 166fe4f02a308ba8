"""Run configuration: one YAML/JSON document, secrets only from the environment."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .errors import ConfigError
from .motion import RolloutParams
from .perception import FusionConfig
from .reasoning.backends import BACKEND_KINDS
from .reasoning.prompt import TaskSpec
from .scenario import ScenarioParams


@dataclass(frozen=True)
class BackendSettings:
    kind: str = "rule"
    model: str = "gpt-4.1"
    base_url: Optional[str] = None  # falls back to PLA_API_BASE
    timeout: float = 60.0
    retries: int = 2
    max_in_flight: int = 4
    replay_dir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"backend.kind must be one of {BACKEND_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    frames: Optional[str] = None
    out: str = "run"
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    backend: BackendSettings = field(default_factory=BackendSettings)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    task: TaskSpec = field(default_factory=TaskSpec)
    rollout: RolloutParams = field(default_factory=RolloutParams)
    workers: int = 4
    keep_going: bool = False
    plots: bool = True

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def fingerprint(self, frames_text: str = "") -> str:
        """Hash of the input frames and every processing setting; paths are excluded."""
        payload = {
            "frames": hashlib.sha256(frames_text.encode("utf-8")).hexdigest(),
            "backend": {k: v for k, v in dataclasses.asdict(self.backend).items() if k not in ("replay_dir", "base_url")},
            "fusion": dataclasses.asdict(self.fusion),
            "task": dataclasses.asdict(self.task),
            "rollout": dataclasses.asdict(self.rollout),
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _section(cls, data: Any, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {unknown}")
    try:
        if cls is ScenarioParams:
            return ScenarioParams.from_dict(data)
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def config_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    sections = {"scenario": ScenarioParams, "backend": BackendSettings, "fusion": FusionConfig, "task": TaskSpec, "rollout": RolloutParams}
    top = {"frames", "out", "workers", "keep_going", "plots"}
    unknown = sorted(set(data) - top - set(sections))
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    kwargs: Dict[str, Any] = {name: _section(cls, data.get(name), name) for name, cls in sections.items()}
    for key in top:
        if key in data and data[key] is not None:
            kwargs[key] = data[key]
    if base_dir is not None:
        for key in ("frames", "out"):
            if key in kwargs and not Path(kwargs[key]).is_absolute():
                kwargs[key] = str(base_dir / kwargs[key])
        rd = kwargs["backend"].replay_dir
        if rd and not Path(rd).is_absolute():
            kwargs["backend"] = dataclasses.replace(kwargs["backend"], replay_dir=str(base_dir / rd))
    if "frames" in kwargs and not Path(kwargs["frames"]).is_file():
        raise ConfigError(f"frames file not found: {kwargs['frames']}")
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None
    return config_from_dict(data or {}, base_dir=path.parent)
