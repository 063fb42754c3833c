"""Deep Q-network baseline with a target network and epsilon-greedy exploration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import AdamState, ModelWeights, Mlp, all_finite, extract_weights, load_weights
from ..replay import Batch, ReplayBuffer


def linear_epsilon(t: int, start: float, end: float, decay_steps: int) -> float:
    """Linear decay from ``start`` at t=0 to ``end`` at ``decay_steps``, constant afterwards."""
    if decay_steps <= 0 or t >= decay_steps:
        return end
    frac = min(max(t, 0) / decay_steps, 1.0)
    return start + frac * (end - start)


@dataclass(frozen=True)
class DqnConfig:
    hidden: tuple[int, ...] = (256, 256)
    gamma: float = 0.99
    learning_rate: float = 5e-4
    batch_size: int = 256
    buffer_capacity: int = 100_000
    start_timesteps: int = 1000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    target_update_interval: int = 500
    # maps the clipped reward range [0, 100] onto [0, 1]
    reward_scale: float = 0.01


class DqnAgent:
    name = "dqn"

    def __init__(self, config: DqnConfig | None = None, state_dim: int = 4, n_actions: int = 3,
                 init_rng: np.random.Generator | None = None,
                 action_rng: np.random.Generator | None = None,
                 replay_rng: np.random.Generator | None = None, seed: int = 0):
        self.config = c = config or DqnConfig()
        if init_rng is None or action_rng is None or replay_rng is None:
            init_rng, action_rng, replay_rng = (np.random.default_rng(s)
                                                for s in np.random.SeedSequence(seed).spawn(3))
        self.n_actions = n_actions
        self.q_net = Mlp((state_dim, *c.hidden, n_actions), rng=init_rng)
        self.q_target = self.q_net.copy()
        self.optimizer = AdamState.for_params(self.q_net.params, c.learning_rate)
        self.buffer = ReplayBuffer(c.buffer_capacity, state_dim)
        self.action_rng = action_rng
        self.replay_rng = replay_rng
        self.t = 0

    def epsilon(self, t: int | None = None) -> float:
        c = self.config
        return linear_epsilon(self.t if t is None else t, c.epsilon_start, c.epsilon_end, c.epsilon_decay_steps)

    def act(self, state: np.ndarray, t: int, explore: bool = True) -> int:
        if explore and (t < self.config.start_timesteps or self.action_rng.random() < self.epsilon(t)):
            return int(self.action_rng.integers(self.n_actions))
        return int(np.argmax(self.q_net.forward(state)))

    def td_target(self, rewards: np.ndarray, next_states: np.ndarray, dones: np.ndarray) -> np.ndarray:
        c = self.config
        next_max = self.q_target.forward(next_states).max(axis=-1)
        return c.reward_scale * rewards + (1.0 - dones) * c.gamma * next_max

    def update(self, batch: Batch) -> float:
        """One Adam step on the squared TD error of the taken actions; returns the pre-step loss."""
        y = self.td_target(batch.rewards, batch.next_states, batch.dones)
        q, cache = self.q_net.forward_cached(batch.states)
        rows = np.arange(len(batch))
        diff = q[rows, batch.actions] - y
        grad = np.zeros_like(q)
        grad[rows, batch.actions] = 2.0 * diff / len(batch)
        self.optimizer.step(self.q_net.params, self.q_net.backward_cached(cache, grad))
        return float(np.mean(diff * diff))

    def observe(self, transition, t: int) -> dict:
        c = self.config
        self.buffer.push(transition)
        self.t = t + 1
        info = {}
        if t >= c.start_timesteps and len(self.buffer) >= c.batch_size:
            info["loss"] = self.update(self.buffer.sample(c.batch_size, self.replay_rng))
            if t % c.target_update_interval == 0:
                load_weights(self.q_target, extract_weights(self.q_net))
        info["epsilon"] = self.epsilon()
        return info

    def federated_weights(self) -> dict[str, ModelWeights]:
        return {"q_net": extract_weights(self.q_net)}

    def load_federated_weights(self, bundle: dict[str, ModelWeights]) -> None:
        load_weights(self.q_net, bundle["q_net"])

    def state_dict(self) -> dict:
        return {"q_net": extract_weights(self.q_net), "q_target": extract_weights(self.q_target),
                "t": self.t, "optimizer_steps": self.optimizer.step_count}

    def load_state_dict(self, d: dict) -> None:
        load_weights(self.q_net, d["q_net"])
        load_weights(self.q_target, d["q_target"])
        self.t = int(d["t"])
        self.optimizer.step_count = int(d["optimizer_steps"])

    def is_finite(self) -> bool:
        return all_finite(self.q_net.params) and all_finite(self.q_target.params)


def dqn_update(agent: DqnAgent, batch: Batch) -> float:
    return agent.update(batch)
