"""Run configuration: file + flag resolution with validated defaults.

Config files are JSON objects whose keys match :class:`RunConfig` fields;
command-line flags override file values, which override defaults. The
resolved configuration is echoed into every report.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields

from .exceptions import ConfigError
from .heads import METRICS, HeadConfig

THREADS_ENV_VAR = "PROTOSHOT_THREADS"


@dataclass
class RunConfig:
    embeddings: str | None = None
    hierarchy: str | None = None
    splits: str | None = None
    checkpoint: str | None = None
    metric: str = "euclidean"
    tau: float = 1.0
    c: float = 0.01
    r: float = 1.0
    gamma: float = 2.0
    k: int = 5
    n_shot: int = 5
    n_query: int = 15
    episodes: int = 1000
    seed: int = 0
    threads: int = 1
    lr: float | None = None
    momentum: float = 0.9
    weight_decay: float = 0.0005
    epochs: int = 5
    episodes_per_epoch: int = 500
    batch_episodes: int = 2
    val_episodes: int = 500
    out_dim: int | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"invalid value for 'metric': {self.metric!r}")
        _require(self.tau > 0, "tau", self.tau)
        if self.metric == "hyperbolic":
            _require(self.c > 0, "c", self.c)
            _require(self.r > 0, "r", self.r)
        if self.metric == "hierarchical":
            _require(self.gamma > 0, "gamma", self.gamma)
        _require(self.k >= 2, "k", self.k)
        _require(self.n_shot >= 1, "n_shot", self.n_shot)
        _require(self.n_query >= 1, "n_query", self.n_query)
        _require(self.episodes >= 1, "episodes", self.episodes)
        _require(self.threads >= 1, "threads", self.threads)
        _require(self.lr is None or self.lr > 0, "lr", self.lr)
        _require(0.0 <= self.momentum < 1.0, "momentum", self.momentum)
        _require(self.weight_decay >= 0.0, "weight_decay", self.weight_decay)
        _require(self.epochs >= 0, "epochs", self.epochs)
        _require(self.episodes_per_epoch >= 1, "episodes_per_epoch", self.episodes_per_epoch)
        _require(self.batch_episodes >= 1, "batch_episodes", self.batch_episodes)
        _require(self.val_episodes >= 1, "val_episodes", self.val_episodes)
        _require(self.out_dim is None or self.out_dim >= 1, "out_dim", self.out_dim)

    def head_config(self) -> HeadConfig:
        return HeadConfig(
            metric=self.metric, tau=self.tau, c=self.c, r=self.r, gamma=self.gamma
        )

    def echo(self) -> dict:
        """Report-facing view; excludes threads, which never affects results."""
        doc = {}
        for f in fields(self):
            if f.name == "threads":
                continue
            doc[f.name] = getattr(self, f.name)
        return doc


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}
_STR_KEYS = {"embeddings", "hierarchy", "splits", "checkpoint", "metric"}
_INT_KEYS = {
    "k", "n_shot", "n_query", "episodes", "seed", "threads",
    "epochs", "episodes_per_epoch", "batch_episodes", "val_episodes", "out_dim",
}
_FLOAT_KEYS = {"tau", "c", "r", "gamma", "lr", "momentum", "weight_decay"}
_OPTIONAL_KEYS = {"embeddings", "hierarchy", "splits", "checkpoint", "lr", "out_dim"}


def _require(cond: bool, key: str, value) -> None:
    if not cond:
        raise ConfigError(f"invalid value for {key!r}: {value!r}")


def _coerce(key: str, value):
    if value is None:
        if key in _OPTIONAL_KEYS:
            return None
        raise ConfigError(f"invalid value for {key!r}: null")
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"invalid value for {key!r}: {value!r}")
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            # Allow "5"-style strings from flag parsing.
            try:
                ivalue = int(str(value))
            except ValueError:
                raise ConfigError(f"invalid value for {key!r}: {value!r}") from None
            return ivalue
        return value
    if key in _FLOAT_KEYS:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"invalid value for {key!r}: {value!r}") from None
    raise ConfigError(f"unknown key {key!r}")


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Resolve defaults <- config file <- explicit overrides, validating keys."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                try:
                    payload = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(
                        f"{path}:{exc.lineno}: invalid JSON: {exc.msg}"
                    ) from None
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(payload, dict):
            raise ConfigError(f"{path}: top level must be an object")
        for key, value in payload.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}: unknown key {key!r}")
            values[key] = _coerce(key, value)
    if "threads" not in values and os.environ.get(THREADS_ENV_VAR):
        values["threads"] = _coerce("threads", os.environ[THREADS_ENV_VAR])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, value)
    return RunConfig(**values)
