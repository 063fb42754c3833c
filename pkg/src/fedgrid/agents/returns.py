"""Discounted and entropy-augmented returns."""

from __future__ import annotations

from typing import Sequence


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Sum of ``gamma**n * rewards[n]``, evaluated by the backward recursion G = r + gamma*G'."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    g = 0.0
    for r in reversed(rewards):
        g = r + gamma * g
    return g


def returns_to_go(rewards: Sequence[float], gamma: float) -> list[float]:
    """G_t for every t of a finite reward sequence."""
    out = [0.0] * len(rewards)
    g = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        g = rewards[i] + gamma * g
        out[i] = g
    return out


def soft_return(rewards: Sequence[float], log_probs: Sequence[float], gamma: float, alpha: float) -> float:
    """Discounted sum of ``r_i - alpha * log pi(a_i|s_i)``."""
    if len(rewards) != len(log_probs):
        raise ValueError("rewards and log_probs differ in length")
    return discounted_return([r - alpha * lp for r, lp in zip(rewards, log_probs)], gamma)
