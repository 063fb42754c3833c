"""Tabular Q-learning over a coarse grid of the normalized state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import ModelWeights
from .dqn import linear_epsilon


def tabular_q_update(table: np.ndarray, s_cell: int, a: int, r: float, s_next_cell: int,
                     alpha: float, gamma: float, done: bool = False) -> float:
    """In-place one-step Q-learning update; returns the TD error."""
    n_cells, n_actions = table.shape
    for cell in (s_cell, s_next_cell):
        if not 0 <= cell < n_cells:
            raise IndexError(f"cell {cell} outside grid of {n_cells} cells")
    if not 0 <= a < n_actions:
        raise IndexError(f"action {a} outside 0..{n_actions - 1}")
    bootstrap = 0.0 if done else gamma * float(np.max(table[s_next_cell]))
    td = r + bootstrap - table[s_cell, a]
    table[s_cell, a] += alpha * td
    return float(td)


@dataclass(frozen=True)
class TabularConfig:
    bins: int = 3
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    start_timesteps: int = 1000


class TabularQAgent:
    name = "tabular"

    def __init__(self, config: TabularConfig | None = None, state_dim: int = 4, n_actions: int = 3,
                 action_rng: np.random.Generator | None = None, seed: int = 0):
        self.config = config or TabularConfig()
        self.state_dim = state_dim
        self.n_actions = n_actions
        self.table = np.zeros((self.config.bins ** state_dim, n_actions))
        self.rng = action_rng if action_rng is not None else np.random.default_rng(seed)
        self.t = 0

    def cell(self, vector: np.ndarray) -> int:
        bins = self.config.bins
        idx = np.minimum((np.clip(vector, 0.0, 1.0) * bins).astype(np.int64), bins - 1)
        return int(np.ravel_multi_index(tuple(idx), (bins,) * self.state_dim))

    def epsilon(self, t: int | None = None) -> float:
        c = self.config
        return linear_epsilon(self.t if t is None else t, c.epsilon_start, c.epsilon_end, c.epsilon_decay_steps)

    def act(self, state: np.ndarray, t: int, explore: bool = True) -> int:
        if explore and (t < self.config.start_timesteps or self.rng.random() < self.epsilon(t)):
            return int(self.rng.integers(self.n_actions))
        return int(np.argmax(self.table[self.cell(state)]))

    def observe(self, transition, t: int) -> dict:
        self.t = t + 1
        td = tabular_q_update(self.table, self.cell(transition.state), transition.action,
                              transition.reward, self.cell(transition.next_state),
                              self.config.alpha, self.config.gamma, transition.done)
        return {"td_error": td}

    def federated_weights(self) -> dict[str, ModelWeights]:
        return {"table": ModelWeights((self.table,))}

    def load_federated_weights(self, bundle: dict[str, ModelWeights]) -> None:
        self.table = np.array(bundle["table"].arrays[0])

    def state_dict(self) -> dict:
        return {"table": ModelWeights((self.table,)), "t": self.t}

    def load_state_dict(self, d: dict) -> None:
        self.table = np.array(d["table"].arrays[0])
        self.t = int(d["t"])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.table)))
