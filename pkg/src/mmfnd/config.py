"""Flat key=value run configuration with TOML file, environment, and
command-line layering.

Precedence, lowest to highest: dataclass defaults, TOML file, MMFND_*
environment variables, explicit overrides (CLI flags).  Unknown file keys
are rejected so typos fail loudly; the effective config is written into
every run directory for reproducibility.

``MMFND_KERNELS`` is reserved for compute-backend selection and is not a
config field.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

ENV_PREFIX = "MMFND_"
_RESERVED_ENV = {"MMFND_KERNELS"}


@dataclass
class RunConfig:
    # corpus / split
    manifest: str = "fixtures/dataset/manifest.csv"
    image_cache: str = "runs/image_cache"
    feature_cache: str = "runs/feature_cache"
    out_dir: str = "runs/latest"
    test_fraction: float = 0.3
    strict_manifest: bool = False
    fetch_workers: int = 8

    # text / embeddings
    vector_size: int = 300
    window: int = 5
    negative: int = 5
    min_count: int = 1
    embed_epochs: int = 10
    l_max_cap: int = 32

    # conv-base weights
    weights_file: str = "runs/vgg16_weights.npz"

    # training
    epochs: int = 10
    batch_size: int = 32
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    seed: int = 42
    target: str = "fusion"
    fusion_mode: str = "penultimate"
    dropout: float = 0.5
    freeze_embedding: bool = False
    standardize_features: bool = True

    # service
    host: str = "127.0.0.1"
    port: int = 8000
    bundle_dir: str = "runs/latest/bundle"
    fetch_timeout: float = 10.0
    cors_origin: str = "*"
    allow_private_urls: bool = False


_FIELDS = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    target = _FIELDS[name]
    if target in ("int",):
        return int(raw)
    if target in ("float",):
        return float(raw)
    if target in ("bool",):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: cannot parse {raw!r} as a boolean")
    return raw


def load_run_config(path: str | Path | None = None,
                    env: dict | None = None,
                    overrides: dict | None = None) -> RunConfig:
    """Layer defaults <- TOML file <- environment <- overrides."""
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        unknown = sorted(set(data) - set(_FIELDS))
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        for key, val in data.items():
            if isinstance(val, (dict, list)):
                raise ValueError(f"{path}: {key} must be a scalar, got {type(val).__name__}")
            values[key] = val
    env = os.environ if env is None else env
    for key, raw in env.items():
        if not key.startswith(ENV_PREFIX) or key in _RESERVED_ENV:
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in _FIELDS:
            values[name] = _coerce(name, raw)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ValueError(f"unknown config override {key!r}")
        values[key] = val
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if not (0.0 < cfg.test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in (0,1), got {cfg.test_fraction}")
    if cfg.vector_size < 1:
        raise ValueError(f"vector_size must be >= 1, got {cfg.vector_size}")
    if cfg.port < 1 or cfg.port > 65535:
        raise ValueError(f"port must be in [1,65535], got {cfg.port}")


def save_config(cfg: RunConfig, path: str | Path) -> None:
    """Emit the effective config as flat TOML (strings quoted, bools lowercase)."""
    lines = []
    for f in fields(RunConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            rendered = "true" if val else "false"
        elif isinstance(val, (int, float)):
            rendered = repr(val)
        else:
            escaped = str(val).replace("\\", "\\\\").replace('"', '\\"')
            rendered = f'"{escaped}"'
        lines.append(f"{f.name} = {rendered}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
