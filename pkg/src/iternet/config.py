"""Run configuration: one JSON document describing model, training, render.

Loading is strict: unknown keys anywhere are rejected, and every dataclass's
own validation runs on construction.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import RenderConfig
from .errors import ConfigError
from .model import ModelConfig
from .training import TrainConfig


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    paths: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "model": dataclasses.asdict(self.model),
            "train": dataclasses.asdict(self.train),
            "render": dataclasses.asdict(self.render),
        }
        out["model"]["stage_units"] = list(self.model.stage_units)
        out["model"]["stage_channels"] = list(self.model.stage_channels)
        if self.paths:
            out["paths"] = dict(self.paths)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build_section(cls, payload: dict, section: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"section '{section}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(payload) - known)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}' in section '{section}'")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid section '{section}': {e}") from e


def run_config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    sections = {"model", "train", "render", "paths"}
    unknown = sorted(set(doc) - sections)
    if unknown:
        raise ConfigError(f"unknown top-level key '{unknown[0]}'")
    paths = doc.get("paths", {})
    if not isinstance(paths, dict) or not all(
        isinstance(v, str) for v in paths.values()
    ):
        raise ConfigError("section 'paths' must map names to strings")
    return RunConfig(
        model=_build_section(ModelConfig, doc.get("model", {}), "model"),
        train=_build_section(TrainConfig, doc.get("train", {}), "train"),
        render=_build_section(RenderConfig, doc.get("render", {}), "render"),
        paths=dict(paths),
    )


def load_run_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from e
    return run_config_from_dict(doc)
