from __future__ import annotations

import numpy as np


class RandomAgent:
    """Non-learning baseline: uniform over the action set."""

    name = "random"

    def __init__(self, n_actions: int = 3, action_rng: np.random.Generator | None = None, seed: int = 0):
        self.n_actions = n_actions
        self.rng = action_rng if action_rng is not None else np.random.default_rng(seed)

    def act(self, state: np.ndarray, t: int, explore: bool = True) -> int:
        return int(self.rng.integers(self.n_actions))

    def observe(self, transition, t: int) -> dict:
        return {}

    def state_dict(self) -> dict:
        return {}

    def load_state_dict(self, d: dict) -> None:
        pass

    def is_finite(self) -> bool:
        return True
