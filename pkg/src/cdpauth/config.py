"""Run configuration.

A run is described by a YAML mapping that mirrors a tree of frozen
dataclasses: dataset synthesis, pipeline choice, training
hyperparameters, and the OC-SVM search grid.  Parsing is strict: any
key that does not name a dataclass field is an error (citing its full
path), and scalar types must match the field annotations.  Every config
has a stable content digest so checkpoints and reports can record
exactly which configuration produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from collections.abc import Mapping as AbcMapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import yaml

from .channel import AttackModel, PrintModel, SynthesisConfig
from .core import Label
from .oneclass import ExtractorHyper, FeatureSetup, Variant
from .supervised import SetupId, SupervisedHyper

__all__ = [
    "ConfigError",
    "OcSvmGrid",
    "PipelineConfig",
    "RunConfig",
    "from_mapping",
    "load_config",
    "as_canonical_dict",
    "config_digest",
]

PIPELINE_KINDS = ("supervised", "oneclass")


class ConfigError(ValueError):
    """Configuration rejected; the message carries the offending key path."""


@dataclass(frozen=True)
class OcSvmGrid:
    """Hyperparameter search grid for the one-class SVM."""

    nus: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1)
    kernel_gammas: tuple[float, ...] = (0.05, 0.1, 0.5, 1.0, 2.0)
    kernel: str = "rbf"

    def __post_init__(self) -> None:
        if not self.nus or not self.kernel_gammas:
            raise ValueError("ocsvm grid must contain at least one nu and one gamma")


@dataclass(frozen=True)
class PipelineConfig:
    """Which authentication pipeline a run trains and evaluates."""

    kind: str = "supervised"
    setup: str = "all_fakes"  # fake-knowledge setup (supervised pipelines)
    variant: str = "l2"  # extractor variant (one-class pipelines)
    feature_setup: int = 4  # feature subset id (one-class pipelines)
    beta: float = 1.0
    runs: int = 5

    def __post_init__(self) -> None:
        if self.kind not in PIPELINE_KINDS:
            raise ValueError(f"pipeline kind must be one of {PIPELINE_KINDS}, got {self.kind!r}")
        SetupId(self.setup)
        Variant(self.variant)
        FeatureSetup(self.feature_setup)
        if self.beta < 0.0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.runs < 1:
            raise ValueError(f"runs must be positive, got {self.runs}")

    @property
    def setup_id(self) -> SetupId:
        return SetupId(self.setup)

    @property
    def variant_id(self) -> Variant:
        return Variant(self.variant)

    @property
    def feature_setup_id(self) -> FeatureSetup:
        return FeatureSetup(self.feature_setup)


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one reproducible run."""

    seed: int = 0
    out_dir: str = "runs/out"
    dataset: SynthesisConfig = field(default_factory=SynthesisConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    supervised_hyper: SupervisedHyper = field(default_factory=SupervisedHyper)
    oneclass_hyper: ExtractorHyper = field(default_factory=ExtractorHyper)
    ocsvm_grid: OcSvmGrid = field(default_factory=OcSvmGrid)


# ---------------------------------------------------------------------------
# strict tree -> dataclass construction
# ---------------------------------------------------------------------------

def _coerce_scalar(annotation: type, value: Any, path: str) -> Any:
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported config field type {annotation!r}")


def _coerce(annotation: Any, value: Any, path: str) -> Any:
    origin = typing.get_origin(annotation)
    if origin is tuple:
        args = typing.get_args(annotation)
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a sequence, got {value!r}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{path}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if origin in (dict, AbcMapping):
        key_t, val_t = typing.get_args(annotation)
        if key_t is Label and val_t is AttackModel:
            return _build_attacks(value, path)
        raise ConfigError(f"{path}: unsupported config mapping type {annotation!r}")
    if isinstance(annotation, type) and dataclasses.is_dataclass(annotation):
        return _build(annotation, value, path)
    if isinstance(annotation, type) and issubclass(annotation, Enum):
        try:
            return annotation(value)
        except ValueError:
            raise ConfigError(f"{path}: {value!r} is not a valid {annotation.__name__}") from None
    return _coerce_scalar(annotation, value, path)


def _build(cls: type, data: Any, path: str, injected: Mapping[str, Any] | None = None) -> Any:
    if not isinstance(data, AbcMapping):
        raise ConfigError(f"{path}: expected a mapping, got {data!r}")
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    injected = dict(injected or {})
    allowed = [n for n in names if n not in injected]
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}; expected keys from {allowed}")
    kwargs = dict(injected)
    for name in allowed:
        if name in data:
            kwargs[name] = _coerce(hints[name], data[name], f"{path}.{name}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _build_attacks(data: Any, path: str) -> dict[Label, AttackModel]:
    """Attack presets keyed by fake label; preset_name comes from the key."""
    if not isinstance(data, AbcMapping):
        raise ConfigError(f"{path}: expected a mapping of fake labels, got {data!r}")
    out: dict[Label, AttackModel] = {}
    for key, entry in data.items():
        try:
            label = Label(key)
        except ValueError:
            raise ConfigError(f"{path}: unknown fake label {key!r}") from None
        out[label] = _build(AttackModel, entry, f"{path}.{key}", injected={"preset_name": label})
    return out


def from_mapping(data: Mapping[str, Any] | None) -> RunConfig:
    """Build a RunConfig from a parsed YAML/JSON mapping (strict keys)."""
    return _build(RunConfig, data or {}, "config")


def load_config(path: str | Path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        data = {}
    if not isinstance(data, AbcMapping):
        raise ConfigError(f"{path}: config root must be a mapping")
    return from_mapping(data)


# ---------------------------------------------------------------------------
# canonical form and digest
# ---------------------------------------------------------------------------

def _canonical(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: _canonical(getattr(value, f.name)) for f in dataclasses.fields(value)
        }
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, AbcMapping):
        return {str(_canonical(k)): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    return value


def as_canonical_dict(cfg: RunConfig) -> dict:
    """JSON-ready dict with enum keys flattened and tuples listed."""
    return _canonical(cfg)


def config_digest(cfg: RunConfig) -> str:
    """Hex digest of the canonical JSON form; stable across sessions."""
    blob = json.dumps(as_canonical_dict(cfg), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
