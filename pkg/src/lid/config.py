"""One JSON config tree for every command, with strict key checking.

The tree is plain nested dataclasses. Files set fields by name, command
line flags override them by dotted path ("train.lr=0.05"), and whatever
survives is hashable into a digest so a run can be reproduced from its
manifest alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path


class ConfigError(ValueError):
    """Unknown key, malformed value, or unusable override."""


@dataclass(frozen=True)
class CorpusSection:
    width: int = 100
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class FeatureSection:
    space: str = "hashed"           # "hashed" or "selected"
    n: int = 3                      # n-gram order for selection
    k: int = 75_000                 # selected vocabulary size
    bins: int = 150_000             # hashed space size
    n_range: tuple[int, int] = (1, 3)


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 5
    lr: float | None = None         # None: per-architecture default
    batch_size: int = 32
    patience: int = 3
    l2: float = 1e-4
    subset_cap: int | None = None


@dataclass(frozen=True)
class NBSection:
    alpha: float = 1.0


@dataclass(frozen=True)
class EmbedSection:
    dim: int = 300
    buckets: int = 2_000_000
    neg_samples: int = 100
    min_count: int = 1
    n_range: tuple[int, int] = (1, 4)


@dataclass(frozen=True)
class CompressSection:
    dim: int = 100
    min_count: int = 5
    quantize: bool = True


@dataclass(frozen=True)
class CodeswitchSection:
    span_width: int = 15
    threshold: float = 0.5
    min_len: int = 3


@dataclass(frozen=True)
class SynthSection:
    n_langs: int = 10
    samples_per_lang: int = 100
    overlap: float = 0.3
    words_range: tuple[int, int] = (5, 15)


@dataclass(frozen=True)
class EvalSection:
    groups: dict[str, list[str]] = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    corpus: CorpusSection = field(default_factory=CorpusSection)
    features: FeatureSection = field(default_factory=FeatureSection)
    train: TrainSection = field(default_factory=TrainSection)
    nb: NBSection = field(default_factory=NBSection)
    embed: EmbedSection = field(default_factory=EmbedSection)
    compress: CompressSection = field(default_factory=CompressSection)
    codeswitch: CodeswitchSection = field(default_factory=CodeswitchSection)
    synth: SynthSection = field(default_factory=SynthSection)
    eval: EvalSection = field(default_factory=EvalSection)


def default_config() -> RunConfig:
    return RunConfig()


def _coerce(path: str, default, value):
    """Fit a JSON value to the shape of the field's default."""
    if is_dataclass(default):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return _from_dict(type(default), value, path)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{path}: expected a list of {len(default)} numbers")
        return tuple(type(d)(v) for d, v in zip(default, value))
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        for key, entry in value.items():
            if not isinstance(key, str) or not isinstance(entry, list):
                raise ConfigError(f"{path}: expected string keys mapping to lists")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    # default is None (lr, subset_cap): numbers or null
    if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigError(f"{path}: expected a number or null")
    return value


def _default_of(f):
    if f.default is not MISSING:
        return f.default
    return f.default_factory()


def _from_dict(cls, data: dict, path: str = "") -> object:
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown config key {where}{unknown[0]!r}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        sub_path = f"{path}.{name}" if path else name
        kwargs[name] = _coerce(sub_path, _default_of(f), data[name])
    return cls(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    """Parse a JSON config file, rejecting unknown keys at any depth."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return _from_dict(RunConfig, data)


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply "dotted.path=json_value" assignments on top of a config."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} must look like section.field=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings are convenient: features.space=selected
        cfg = _set_by_path(cfg, key.strip(), value)
    return cfg


def _set_by_path(node, dotted: str, value):
    head, sep, rest = dotted.partition(".")
    match = {f.name: f for f in fields(node)}.get(head)
    if match is None:
        raise ConfigError(f"unknown config key {head!r}")
    current = getattr(node, head)
    if sep:
        if not is_dataclass(current):
            raise ConfigError(f"{head!r} has no sub-fields")
        return replace(node, **{head: _set_by_path(current, rest, value)})
    if is_dataclass(current):
        raise ConfigError(f"{head!r} is a section; set one of its fields")
    return replace(node, **{head: _coerce(dotted, _default_of(match), value)})


def to_canonical_json(cfg: RunConfig) -> str:
    return json.dumps(asdict(cfg), sort_keys=True, separators=(",", ":"))


def config_digest(cfg: RunConfig) -> str:
    """Stable sha256 over the canonical serialized form."""
    return hashlib.sha256(to_canonical_json(cfg).encode("utf-8")).hexdigest()
