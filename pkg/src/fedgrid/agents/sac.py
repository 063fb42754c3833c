"""Discrete-action soft actor-critic.

The policy is a categorical softmax over actor logits, so every expectation
over actions is computed exactly instead of by sampling:

* critic target  y = r + (1-done) * gamma * sum_a' pi(a'|s') [min_i Q'_i(s',a') - alpha log pi(a'|s')]
* actor loss     J_pi = mean_s sum_a pi(a|s) [alpha log pi(a|s) - min_i Q_i(s,a)]
* temperature    J(alpha) = mean_s alpha * (H(pi(.|s)) - target_entropy)

Two online critics and their Polyak-averaged targets give clipped double Q-learning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..nn import AdamState, ModelWeights, Mlp, all_finite, extract_weights, load_weights, softmax_logits
from ..replay import Batch, ReplayBuffer, Transition


@dataclass(frozen=True)
class SacConfig:
    hidden: tuple[int, ...] = (256, 256)
    gamma: float = 0.99
    tau: float = 0.005
    freq: int = 2
    actor_lr: float = 5e-4
    critic_lr: float = 5e-4
    alpha_lr: float = 5e-4
    initial_alpha: float = 1.0
    # None means -|A|
    target_entropy: float | None = None
    batch_size: int = 256
    buffer_capacity: int = 100_000
    start_timesteps: int = 1000
    # maps the clipped reward range [0, 100] onto [0, 1]
    reward_scale: float = 0.01
    # False reproduces the literal target with -alpha*log(pi) outside the discount
    entropy_in_bootstrap: bool = True
    actor_target: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.freq < 1 or self.batch_size < 1:
            raise ValueError("freq and batch_size must be >= 1")
        if self.initial_alpha <= 0:
            raise ValueError("initial_alpha must be > 0")


def policy_entropy(logits: np.ndarray) -> float:
    """Batch-mean entropy of the categorical policy given by ``logits``."""
    probs, log_probs = softmax_logits(logits)
    return float(np.mean(-np.sum(probs * log_probs, axis=-1)))


class SacAgent:
    name = "sac"

    def __init__(self, config: SacConfig | None = None, state_dim: int = 4, n_actions: int = 3,
                 init_rng: np.random.Generator | None = None,
                 action_rng: np.random.Generator | None = None,
                 replay_rng: np.random.Generator | None = None, seed: int = 0):
        self.config = c = config or SacConfig()
        if init_rng is None or action_rng is None or replay_rng is None:
            init_rng, action_rng, replay_rng = (np.random.default_rng(s)
                                                for s in np.random.SeedSequence(seed).spawn(3))
        self.n_actions = n_actions
        sizes = (state_dim, *c.hidden, n_actions)
        self.actor = Mlp(sizes, rng=init_rng)
        self.critic1 = Mlp(sizes, rng=init_rng)
        self.critic2 = Mlp(sizes, rng=init_rng)
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()
        self.actor_target = self.actor.copy() if c.actor_target else None
        self.log_alpha = math.log(c.initial_alpha)
        self.target_entropy = -float(n_actions) if c.target_entropy is None else float(c.target_entropy)
        self.actor_opt = AdamState.for_params(self.actor.params, c.actor_lr)
        self.critic1_opt = AdamState.for_params(self.critic1.params, c.critic_lr)
        self.critic2_opt = AdamState.for_params(self.critic2.params, c.critic_lr)
        self.alpha_opt = AdamState([()], c.alpha_lr)
        self.buffer = ReplayBuffer(c.buffer_capacity, state_dim)
        self.action_rng = action_rng
        self.replay_rng = replay_rng
        self._last_entropy = 0.0

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def networks(self) -> list[Mlp]:
        nets = [self.actor, self.critic1, self.critic2, self.target1, self.target2]
        if self.actor_target is not None:
            nets.append(self.actor_target)
        return nets

    def policy(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return softmax_logits(self.actor.forward(states))

    def select_action(self, state: np.ndarray, explore: bool = True,
                      rng: np.random.Generator | None = None) -> int:
        probs, _ = self.policy(state)
        if not explore:
            return int(np.argmax(probs))
        rng = self.action_rng if rng is None else rng
        idx = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
        return min(idx, self.n_actions - 1)

    def act(self, state: np.ndarray, t: int, explore: bool = True) -> int:
        if explore and t < self.config.start_timesteps:
            return int(self.action_rng.integers(self.n_actions))
        return self.select_action(state, explore)

    def critic_target(self, rewards, next_states, dones) -> np.ndarray:
        c = self.config
        probs, log_probs = self.policy(next_states)
        min_q = np.minimum(self.target1.forward(next_states), self.target2.forward(next_states))
        alpha = self.alpha
        r = c.reward_scale * np.asarray(rewards, dtype=np.float64)
        not_done = 1.0 - np.asarray(dones, dtype=np.float64)
        if c.entropy_in_bootstrap:
            soft_value = np.sum(probs * (min_q - alpha * log_probs), axis=-1)
            return r + not_done * c.gamma * soft_value
        expected_q = np.sum(probs * min_q, axis=-1)
        expected_log_pi = np.sum(probs * log_probs, axis=-1)
        return r + not_done * (c.gamma * expected_q - alpha * expected_log_pi)

    def critic_update(self, batch: Batch) -> tuple[float, float]:
        """One Adam step for each critic towards a shared target; returns pre-step losses."""
        y = self.critic_target(batch.rewards, batch.next_states, batch.dones)
        rows = np.arange(len(batch))
        losses = []
        for net, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            q, cache = net.forward_cached(batch.states)
            diff = q[rows, batch.actions] - y
            grad = np.zeros_like(q)
            grad[rows, batch.actions] = 2.0 * diff / len(batch)
            opt.step(net.params, net.backward_cached(cache, grad))
            losses.append(float(np.mean(diff * diff)))
        return losses[0], losses[1]

    def actor_loss_and_logit_grad(self, logits: np.ndarray, min_q: np.ndarray) -> tuple[float, np.ndarray]:
        probs, log_probs = softmax_logits(logits)
        v = self.alpha * log_probs - min_q
        per_state = np.sum(probs * v, axis=-1, keepdims=True)
        n = logits.shape[0] if logits.ndim == 2 else 1
        # d/dz_j sum_a pi_a v_a = pi_j (v_j - sum_a pi_a v_a); the log-prob term adds sum_a pi_a dlogpi_a = 0
        grad = probs * (v - per_state) / n
        return float(np.mean(per_state)), grad

    def actor_update(self, batch: Batch) -> float:
        """One Adam step on the expected actor loss with both critics frozen; returns the pre-step loss."""
        min_q = np.minimum(self.critic1.forward(batch.states), self.critic2.forward(batch.states))
        logits, cache = self.actor.forward_cached(batch.states)
        loss, grad = self.actor_loss_and_logit_grad(logits, min_q)
        self.actor_opt.step(self.actor.params, self.actor.backward_cached(cache, grad))
        self._last_entropy = policy_entropy(logits)
        return loss

    def temperature_gradient(self, entropy: float) -> float:
        """d J(alpha) / d log_alpha for a batch-mean policy entropy."""
        return self.alpha * (entropy - self.target_entropy)

    def temperature_update(self, batch: Batch | None = None, entropy: float | None = None) -> float:
        """One Adam step on log(alpha); returns the new alpha.

        ``entropy`` defaults to the policy entropy on ``batch``. The training step
        passes the entropy from the actor update's forward pass instead.
        """
        if entropy is None:
            entropy = policy_entropy(self.actor.forward(batch.states))
        grad = np.array(self.temperature_gradient(entropy))
        param = np.array(self.log_alpha)
        self.alpha_opt.step([param], [grad])
        self.log_alpha = float(param)
        return self.alpha

    def polyak_update(self, tau: float | None = None) -> None:
        tau = self.config.tau if tau is None else tau
        if not 0.0 <= tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        pairs = [(self.critic1, self.target1), (self.critic2, self.target2)]
        if self.actor_target is not None:
            pairs.append((self.actor, self.actor_target))
        for online, target in pairs:
            for p, tp in zip(online.params, target.params):
                tp *= 1.0 - tau
                tp += tau * p

    def observe(self, transition: Transition, t: int) -> dict:
        return sac_train_step(self, transition, self.buffer, t, self.config.start_timesteps)

    def federated_weights(self) -> dict[str, ModelWeights]:
        return {"actor": extract_weights(self.actor),
                "critic1": extract_weights(self.critic1),
                "critic2": extract_weights(self.critic2)}

    def load_federated_weights(self, bundle: dict[str, ModelWeights], reset_targets: bool = False) -> None:
        load_weights(self.actor, bundle["actor"])
        load_weights(self.critic1, bundle["critic1"])
        load_weights(self.critic2, bundle["critic2"])
        if reset_targets:
            load_weights(self.target1, bundle["critic1"])
            load_weights(self.target2, bundle["critic2"])

    def state_dict(self) -> dict:
        d = {"actor": extract_weights(self.actor),
             "critic1": extract_weights(self.critic1), "critic2": extract_weights(self.critic2),
             "target1": extract_weights(self.target1), "target2": extract_weights(self.target2),
             "log_alpha": self.log_alpha,
             "optimizer_steps": {"actor": self.actor_opt.step_count,
                                 "critic1": self.critic1_opt.step_count,
                                 "critic2": self.critic2_opt.step_count,
                                 "alpha": self.alpha_opt.step_count}}
        if self.actor_target is not None:
            d["actor_target"] = extract_weights(self.actor_target)
        return d

    def load_state_dict(self, d: dict) -> None:
        for name in ("actor", "critic1", "critic2", "target1", "target2"):
            load_weights(getattr(self, name), d[name])
        if self.actor_target is not None and "actor_target" in d:
            load_weights(self.actor_target, d["actor_target"])
        self.log_alpha = float(d["log_alpha"])
        steps = d.get("optimizer_steps", {})
        self.actor_opt.step_count = int(steps.get("actor", 0))
        self.critic1_opt.step_count = int(steps.get("critic1", 0))
        self.critic2_opt.step_count = int(steps.get("critic2", 0))
        self.alpha_opt.step_count = int(steps.get("alpha", 0))

    def is_finite(self) -> bool:
        return math.isfinite(self.log_alpha) and all(all_finite(n.params) for n in self.networks)


def sac_train_step(agent: SacAgent, transition: Transition, buffer: ReplayBuffer,
                   t: int, start_timesteps: int) -> dict:
    """Store ``transition`` and run the update schedule for global step ``t``."""
    c = agent.config
    buffer.push(transition)
    info: dict = {}
    if t < start_timesteps or len(buffer) < c.batch_size:
        return info
    batch = buffer.sample(c.batch_size, agent.replay_rng)
    info["critic1_loss"], info["critic2_loss"] = agent.critic_update(batch)
    if t % c.freq == 0:
        info["actor_loss"] = agent.actor_update(batch)
        info["alpha"] = agent.temperature_update(entropy=agent._last_entropy)
        agent.polyak_update(c.tau)
    return info
