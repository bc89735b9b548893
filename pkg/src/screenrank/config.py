"""Pipeline configuration: a YAML key-value tree with CLI-flag overrides.

Every config key can be overridden by a CLI flag, and the effective
configuration is echoed into the output directory so any table-producing
command can be reproduced from its artifacts alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .errors import ConfigError
from .lexical import MODELS, LexicalParams
from .corpus import REPRESENTATIONS

# (section, key) in the config tree -> PipelineConfig field name
_TREE_KEYS = {
    ("dataset", "topics"): "topics",
    ("dataset", "qrels"): "qrels",
    ("dataset", "corpus"): "corpus",
    ("ranker", "model"): "model",
    ("ranker", "representation"): "representation",
    ("ranker", "k1"): "k1",
    ("ranker", "b"): "b",
    ("ranker", "lambda"): "jm_lambda",
    ("ranker", "epsilon"): "epsilon",
    ("output", "dir"): "out_dir",
    ("output", "tag"): "tag",
    ("evaluation", "strict"): "strict",
    ("evaluation", "alpha"): "alpha",
    ("run", "jobs"): "jobs",
    ("run", "seed"): "seed",
}


@dataclass
class PipelineConfig:
    topics: str = ""
    qrels: str = ""
    corpus: str = ""
    out_dir: str = ""
    model: str = "bm25"
    representation: str = "tiab"
    k1: float = 1.5
    b: float = 0.75
    jm_lambda: float = 0.5
    epsilon: float = 0.25
    tag: str | None = None
    strict: bool = False
    alpha: float = 0.05
    jobs: int = 1
    seed: int | None = None

    def effective_tag(self) -> str:
        return self.tag or f"{self.model}-{self.representation}"

    def lexical_params(self) -> LexicalParams:
        try:
            return LexicalParams(
                k1=float(self.k1),
                b=float(self.b),
                jm_lambda=float(self.jm_lambda),
                epsilon=float(self.epsilon),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self) -> None:
        """Check referenced paths exist and the output directory is writable."""
        for name in ("topics", "qrels", "corpus"):
            value = getattr(self, name)
            if not value:
                raise ConfigError(f"config is missing the {name} path")
            if not Path(value).is_file():
                raise ConfigError(f"{name} path does not exist: {value}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(
                f"unknown representation {self.representation!r}; expected one of {REPRESENTATIONS}"
            )
        if not self.out_dir:
            raise ConfigError("config is missing the output directory")
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory is not writable: {out}")
        self.lexical_params()

    def to_tree(self) -> dict:
        tree: dict = {}
        for (section, key), attr in _TREE_KEYS.items():
            value = getattr(self, attr)
            if value is None:
                continue
            tree.setdefault(section, {})[key] = value
        return tree


def from_tree(tree: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from a nested key-value tree, rejecting unknown keys."""
    config = base or PipelineConfig()
    if tree is None:
        return config
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    known_fields = {f.name for f in fields(PipelineConfig)}
    for section, entries in tree.items():
        if not isinstance(entries, dict):
            raise ConfigError(f"config section {section!r} must be a mapping")
        for key, value in entries.items():
            attr = _TREE_KEYS.get((section, key))
            if attr is None or attr not in known_fields:
                raise ConfigError(f"unknown config key {section}.{key}")
            setattr(config, attr, value)
    return config


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            tree = yaml.safe_load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid config file {path}: {exc}") from None
    return from_tree(tree)


def write_effective(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_tree(), handle, sort_keys=True)
