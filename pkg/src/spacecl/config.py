"""Experiment configuration and its flat ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .agent import AgentConfig
from .curriculum import KappaMode, SchedulerConfig, Selection
from .envs import ENV_KINDS, params_for
from .errors import ConfigError, InvalidArgumentError

SCHEDULERS = ("space", "cspace", "round_robin")

DEFAULT_ETA = {"cartpole": 0.025}
FALLBACK_ETA = 0.05
DEFAULT_HIDDEN = {"pointmass": (64, 64, 64)}
FALLBACK_HIDDEN = (64, 64)


@dataclass
class ExperimentConfig:
    environment: str = "cartpole"
    scheduler: str = "space"
    eta: Optional[float] = None  # None: 0.025 on cartpole, 0.05 elsewhere
    kappa: float = 1
    kappa_mode: str = "additive"
    dynamic_eta: bool = False
    patience: int = 50
    epsilon_dyn: float = 1e-6
    gamma: float = 0.95
    learning_rate: float = 1e-3
    batch_size: int = 32
    replay_capacity: int = 50_000
    target_sync: int = 200
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    hidden: Optional[tuple[int, ...]] = None  # None: 3x64 on pointmass, 2x64 elsewhere
    activation: str = "relu"
    optimizer: str = "adam"
    n_train: int = 3
    n_test: int = 3
    instance_seed: int = 0
    seeds: tuple[int, ...] = (0,)
    iterations: int = 100
    episode_budget: int = 0  # 0 means no cap beyond `iterations`
    eval_interval: int = 1
    output_dir: str = "runs/default"
    env_overrides: dict = field(default_factory=dict)

    @property
    def resolved_eta(self) -> float:
        if self.eta is not None:
            return self.eta
        return DEFAULT_ETA.get(self.environment, FALLBACK_ETA)

    @property
    def resolved_hidden(self) -> tuple[int, ...]:
        if self.hidden is not None:
            return tuple(self.hidden)
        return DEFAULT_HIDDEN.get(self.environment, FALLBACK_HIDDEN)

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            gamma=self.gamma,
            epsilon_start=self.epsilon_start,
            epsilon_end=self.epsilon_end,
            epsilon_decay_steps=self.epsilon_decay_steps,
            replay_capacity=self.replay_capacity,
            batch_size=self.batch_size,
            target_sync=self.target_sync,
            learning_rate=self.learning_rate,
            hidden=self.resolved_hidden,
            activation=self.activation,
            optimizer=self.optimizer,
        )

    def scheduler_config(self) -> SchedulerConfig:
        return SchedulerConfig(
            eta=self.resolved_eta,
            kappa=self.kappa,
            kappa_mode=self.kappa_mode,
            dynamic_eta=self.dynamic_eta,
            epsilon_dyn=self.epsilon_dyn,
            patience=self.patience,
            selection=Selection.cspace if self.scheduler == "cspace" else Selection.space,
        )

    def problems(self) -> list[str]:
        out = []
        if self.environment not in ENV_KINDS:
            out.append(f"environment must be one of {ENV_KINDS}, got {self.environment!r}")
        if self.scheduler not in SCHEDULERS:
            out.append(f"scheduler must be one of {SCHEDULERS}, got {self.scheduler!r}")
        if self.kappa_mode not in [m.value for m in KappaMode]:
            out.append(f"kappa_mode must be additive or multiplicative, got {self.kappa_mode!r}")
        else:
            try:
                SchedulerConfig(
                    eta=self.resolved_eta,
                    kappa=self.kappa,
                    kappa_mode=self.kappa_mode,
                    epsilon_dyn=self.epsilon_dyn,
                    patience=self.patience,
                )
            except InvalidArgumentError as exc:
                out.extend(str(exc).split("; "))
        out.extend(self.agent_config().problems())
        if self.n_train < 1:
            out.append("n_train must be at least 1")
        if self.n_test < 0:
            out.append("n_test must be non-negative")
        if not self.seeds:
            out.append("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            out.append("seeds must be distinct")
        if self.iterations < 1:
            out.append("iterations must be at least 1")
        if self.episode_budget < 0:
            out.append("episode_budget must be non-negative")
        if self.eval_interval < 1:
            out.append("eval_interval must be at least 1")
        if self.environment in ENV_KINDS:
            try:
                params_for(self.environment, self.env_overrides)
            except (InvalidArgumentError, TypeError) as exc:
                out.append(str(exc))
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
# not part of the echo: where a run is written does not change what it computes
_NOT_ECHOED = {"output_dir"}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(name: str, text: str):
    default = _FIELDS[name].default
    if name == "hidden" and text.strip().lower() in ("none", "default"):
        return None
    if name in ("hidden", "seeds"):
        return tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    if name == "eta":
        return None if text.strip().lower() in ("", "none", "default") else float(text)
    if name == "kappa":
        value = float(text)
        return int(value) if value.is_integer() else value
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text.strip()


def _parse_override(text: str):
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if "," in text:
        return tuple(float(v) for v in text.split(","))
    return text


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, ``env.<name>`` overrides physics."""
    values = {}
    overrides = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, value = (part.strip() for part in line.partition("="))
        if key.startswith("env."):
            overrides[key[4:]] = _parse_override(value)
            continue
        if key not in _FIELDS or key == "env_overrides":
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            problems.append(f"line {lineno}: bad value for {key}: {exc}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(**values, env_overrides=overrides)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _format_value(value) -> str:
    if value is None:
        return "default"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for name in _FIELDS:
        if name in _NOT_ECHOED or name == "env_overrides":
            continue
        lines.append(f"{name} = {_format_value(getattr(config, name))}")
    for key in sorted(config.env_overrides):
        lines.append(f"env.{key} = {_format_value(config.env_overrides[key])}")
    return "\n".join(lines) + "\n"
