from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool

    def __eq__(self, other) -> bool:
        return (isinstance(other, Transition) and self.action == other.action
                and self.reward == other.reward and self.done == other.done
                and np.array_equal(self.state, other.state)
                and np.array_equal(self.next_state, other.next_state))


@dataclass(frozen=True)
class Batch:
    """Column-wise mini-batch; indexing yields individual transitions."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i: int) -> Transition:
        return Transition(self.states[i], int(self.actions[i]), float(self.rewards[i]),
                          self.next_states[i], bool(self.dones[i]))

    @classmethod
    def from_transitions(cls, items: list[Transition]) -> "Batch":
        return cls(np.array([t.state for t in items], dtype=np.float64),
                   np.array([t.action for t in items], dtype=np.int64),
                   np.array([t.reward for t in items], dtype=np.float64),
                   np.array([t.next_state for t in items], dtype=np.float64),
                   np.array([t.done for t in items], dtype=np.float64))


class ReplayBuffer:
    """Ring buffer of transitions with FIFO eviction and uniform sampling with replacement."""

    def __init__(self, capacity: int = 100_000, state_dim: int = 4):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._dones = np.zeros(capacity)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        i = self._next
        self._states[i] = t.state
        self._actions[i] = t.action
        self._rewards[i] = t.reward
        self._next_states[i] = t.next_state
        self._dones[i] = float(t.done)
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _ordered_indices(self) -> np.ndarray:
        start = (self._next - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        return list(self._gather(self._ordered_indices()))

    def _gather(self, idx: np.ndarray) -> Batch:
        return Batch(self._states[idx], self._actions[idx], self._rewards[idx],
                     self._next_states[idx], self._dones[idx])

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self._size == 0:
            raise ValueError(f"cannot sample {batch_size} from an empty buffer")
        # slots 0..size-1 are always the occupied ones
        return self._gather(rng.integers(0, self._size, size=batch_size))
