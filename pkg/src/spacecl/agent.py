"""DQN-style agent over (state || context) observations.

The agent doubles as the scheduler's value oracle: ``evaluate_value`` reads
``max_a Q(s0, c_i, a)`` straight off the online network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import approx
from .core import ContextualEnvironment, EpisodeResult, Instance, rollout
from .errors import InvalidArgumentError, NumericDomainError, ShapeError


@dataclass
class AgentConfig:
    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    replay_capacity: int = 50_000
    batch_size: int = 32
    target_sync: int = 200
    learning_rate: float = 1e-3
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    optimizer: str = "adam"

    def problems(self) -> list[str]:
        out = []
        if not 0.0 <= self.gamma <= 1.0:
            out.append(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            out.append("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.epsilon_decay_steps < 1:
            out.append("epsilon_decay_steps must be positive")
        if self.batch_size < 1:
            out.append("batch_size must be positive")
        if self.replay_capacity < self.batch_size:
            out.append("replay_capacity must be at least batch_size")
        if self.target_sync < 1:
            out.append("target_sync must be positive")
        if not self.learning_rate > 0:
            out.append("learning_rate must be positive")
        if any(h < 1 for h in self.hidden):
            out.append("hidden layer widths must be positive")
        if self.activation not in approx.ACTIVATIONS:
            out.append(f"activation must be one of {approx.ACTIVATIONS}")
        if self.optimizer not in ("sgd", "adam"):
            out.append("optimizer must be sgd or adam")
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise InvalidArgumentError("; ".join(problems))


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action: int, reward: float, next_obs, done: bool) -> None:
        k = self.cursor
        self.obs[k] = obs
        self.actions[k] = action
        self.rewards[k] = reward
        self.next_obs[k] = next_obs
        self.dones[k] = float(done)
        self.cursor = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform draw with replacement."""
        idx = rng.integers(0, self.size, size=batch_size)
        return self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx]


@dataclass
class TrainingStats:
    episodes: int = 0
    env_steps: int = 0
    updates: int = 0
    episode_log: list[tuple[int, float, int]] = field(default_factory=list)  # (instance id, return, length)

    @property
    def per_instance_mean_returns(self) -> dict[int, float]:
        grouped: dict[int, list[float]] = {}
        for inst_id, ret, _ in self.episode_log:
            grouped.setdefault(inst_id, []).append(ret)
        return {k: float(np.mean(v)) for k, v in grouped.items()}


class ValueAgent:
    def __init__(self, obs_dim: int, action_count: int, config: Optional[AgentConfig] = None, seed: int = 0):
        self.config = config or AgentConfig()
        self.config.validate()
        self.obs_dim = obs_dim
        self.action_count = action_count
        self.seed = seed
        init_seq, explore_seq, replay_seq = np.random.SeedSequence(seed).spawn(3)
        sizes = [obs_dim, *self.config.hidden, action_count]
        self.online = approx.init_mlp(sizes, self.config.activation, np.random.default_rng(init_seq)).contiguous()
        self.target = self.online.copy()
        self.optimizer = approx.make_optimizer(self.online, self.config.optimizer, self.config.learning_rate)
        self.replay = ReplayBuffer(self.config.replay_capacity, obs_dim)
        self.explore_rng = np.random.default_rng(explore_seq)
        self.replay_rng = np.random.default_rng(replay_seq)
        self.env_steps = 0
        self.updates = 0

    @classmethod
    def for_env(cls, env: ContextualEnvironment, config: Optional[AgentConfig] = None, seed: int = 0) -> "ValueAgent":
        return cls(env.observation_dimension, env.action_count, config, seed)

    @property
    def epsilon(self) -> float:
        cfg = self.config
        frac = self.env_steps / cfg.epsilon_decay_steps
        if frac >= 1.0:
            return cfg.epsilon_end
        return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)

    def q_values(self, observation) -> np.ndarray:
        obs = np.asarray(observation, dtype=float)
        if obs.shape[-1] != self.obs_dim:
            raise ShapeError(f"observation length {obs.shape[-1]} != network input {self.obs_dim}")
        return approx.mlp_forward(self.online, obs)

    def act(self, observation, greedy: bool = False) -> int:
        q = self.q_values(observation)
        if not greedy and self.explore_rng.random() < self.epsilon:
            return int(self.explore_rng.integers(self.action_count))
        return int(np.argmax(q))  # first maximum, i.e. lowest index on ties

    def greedy_policy(self, observation) -> int:
        return self.act(observation, greedy=True)

    def td_update(self, batch) -> float:
        obs, actions, rewards, next_obs, dones = batch
        n = len(actions)
        if n < 1:
            raise InvalidArgumentError("empty batch")
        q, cache = approx.forward_with_cache(self.online, obs)
        next_q = approx.mlp_forward(self.target, next_obs).max(axis=1)
        targets = rewards + self.config.gamma * (1.0 - dones) * next_q
        rows = np.arange(n)
        diff = q[rows, actions] - targets
        loss = float(np.mean(diff * diff))
        if not np.isfinite(loss):
            raise NumericDomainError("non-finite TD loss")
        out_grad = np.zeros_like(q)
        out_grad[rows, actions] = 2.0 * diff / n
        grads = approx.backward(self.online, cache, out_grad)
        approx.apply_update(self.optimizer, self.online, grads)
        self.updates += 1
        if self.updates % self.config.target_sync == 0:
            self.target = self.online.copy()
        return loss

    def evaluate_value(self, env: ContextualEnvironment, instance: Instance) -> float:
        """max_a Q(s0 || c_i, a). Touches nothing but the environment's reset."""
        obs = env.reset(instance)
        return float(self.q_values(obs).max())

    def evaluate_values(self, env: ContextualEnvironment, instances: Iterable[Instance]) -> dict[int, float]:
        instances = list(instances)
        if not instances:
            return {}
        obs = np.stack([env.initial_observation(inst) for inst in instances])
        values = self.q_values(obs).max(axis=1)
        return {inst.id: float(v) for inst, v in zip(instances, values)}

    def run_episode(self, env: ContextualEnvironment, instance: Instance, learn: bool = True) -> tuple[float, int]:
        obs = env.reset(instance)
        total = 0.0
        length = 0
        done = False
        batch_size = self.config.batch_size
        while not done:
            action = self.act(obs)
            next_obs, reward, done = env.step(action)
            # truncation at the episode cap is not a true terminal state
            self.replay.add(obs, action, reward, next_obs, env.terminated)
            self.env_steps += 1
            if learn and len(self.replay) >= batch_size:
                self.td_update(self.replay.sample(batch_size, self.replay_rng))
            total += reward
            length += 1
            obs = next_obs
        return total, length

    def train_on_instances(
        self, env: ContextualEnvironment, instances: Sequence[Instance], episodes_per_instance: int = 1
    ) -> TrainingStats:
        if not instances:
            raise InvalidArgumentError("no instances to train on")
        stats = TrainingStats()
        updates_before = self.updates
        for inst in instances:
            for _ in range(episodes_per_instance):
                ret, length = self.run_episode(env, inst)
                stats.episode_log.append((inst.id, ret, length))
                stats.episodes += 1
                stats.env_steps += length
        stats.updates = self.updates - updates_before
        return stats

    def greedy_rollout(self, env: ContextualEnvironment, instance: Instance) -> EpisodeResult:
        return rollout(env, instance, self.greedy_policy, env.max_steps, self.config.gamma)

    def save(self, path) -> None:
        meta = {
            "gamma": repr(self.config.gamma),
            "epsilon": repr(self.epsilon),
            "env_steps": self.env_steps,
            "updates": self.updates,
        }
        approx.save_params(self.online, path, meta)

    def load(self, path) -> None:
        params, meta = approx.load_params(path)
        if params.sizes != self.online.sizes:
            raise ShapeError(f"checkpoint sizes {params.sizes} != agent sizes {self.online.sizes}")
        self.online = params.contiguous()
        self.target = self.online.copy()
        self.optimizer = approx.make_optimizer(self.online, self.config.optimizer, self.config.learning_rate)
        self.env_steps = int(meta.get("env_steps", 0))
        self.updates = int(meta.get("updates", 0))
