"""Learning agents and the factory used by the training runner."""

from __future__ import annotations

import numpy as np

from .baselines import RandomAgent
from .dqn import DqnAgent, DqnConfig, dqn_update, linear_epsilon
from .returns import discounted_return, returns_to_go, soft_return
from .sac import SacAgent, SacConfig, sac_train_step
from .tabular import TabularConfig, TabularQAgent, tabular_q_update

AGENT_KINDS = ("sac", "dqn", "random", "tabular")


def make_agent(kind: str, configs: dict, rngs: dict[str, np.random.Generator],
               state_dim: int = 4, n_actions: int = 3):
    """Build an agent; ``rngs`` needs 'agent-init', 'action-sampling' and 'replay-sampling'."""
    if kind == "sac":
        return SacAgent(configs["sac"], state_dim, n_actions, rngs["agent-init"],
                        rngs["action-sampling"], rngs["replay-sampling"])
    if kind == "dqn":
        return DqnAgent(configs["dqn"], state_dim, n_actions, rngs["agent-init"],
                        rngs["action-sampling"], rngs["replay-sampling"])
    if kind == "tabular":
        return TabularQAgent(configs["tabular"], state_dim, n_actions, rngs["action-sampling"])
    if kind == "random":
        return RandomAgent(n_actions, rngs["action-sampling"])
    raise ValueError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")


__all__ = [
    "AGENT_KINDS", "DqnAgent", "DqnConfig", "RandomAgent", "SacAgent", "SacConfig",
    "TabularConfig", "TabularQAgent", "discounted_return", "dqn_update", "linear_epsilon",
    "make_agent", "returns_to_go", "sac_train_step", "soft_return", "tabular_q_update",
]
