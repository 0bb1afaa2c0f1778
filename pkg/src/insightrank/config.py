"""Single structured configuration with per-stage sections.

Every stage default lives on the stage dataclass; ``PipelineConfig`` bundles
them and round-trips through JSON, so one file drives a full reproducible
run.  CLI flags override individual fields.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigError, ParseError
from .insights import ExtractConfig
from .model import ModelConfig
from .synth import SynthConfig
from .textsim import TextConfig

__all__ = ["EvalConfig", "SplitConfig", "ClusterConfig", "PipelineConfig"]


@dataclass(frozen=True)
class EvalConfig:
    ks: tuple[int, ...] = (1, 3, 5)
    binary_relevance: bool = False


@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {self.ratios}")


@dataclass(frozen=True)
class ClusterConfig:
    k: int = 7
    seed: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    extract: ExtractConfig = field(default_factory=ExtractConfig)
    text: TextConfig = field(default_factory=TextConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        sections = {}
        known = {f.name: f for f in fields(cls)}
        for name, payload in obj.items():
            if name not in known:
                raise ConfigError(f"unknown config section {name!r}")
            section_cls = known[name].default_factory
            valid = {f.name for f in fields(section_cls)}
            unknown = set(payload) - valid
            if unknown:
                raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
            payload = {
                k: tuple(v) if isinstance(v, list) else v for k, v in payload.items()
            }
            sections[name] = section_cls(**payload)
        return cls(**sections)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        return cls.from_dict(obj)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def override(self, **section_overrides) -> "PipelineConfig":
        """Replace individual fields, e.g. override(model={'seed': 3})."""
        updates = {}
        for name, kv in section_overrides.items():
            updates[name] = replace(getattr(self, name), **kv)
        return replace(self, **updates)
