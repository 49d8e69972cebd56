from dataclasses import dataclass
from typing import List

import numpy as np

from coauthor.exceptions import InsufficientDataError

from .features import STATE_DIM


@dataclass
class Transition:
    state: np.ndarray
    decision: int
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass
class Batch:
    states: np.ndarray
    decisions: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


class ReplayBuffer:
    """
    Fixed-capacity ring of transitions; the oldest is overwritten first.
    """

    def __init__(self, capacity: int, state_dim: int = STATE_DIM) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.__states = np.zeros((capacity, state_dim))
        self.__next_states = np.zeros((capacity, state_dim))
        self.__decisions = np.zeros(capacity, dtype=np.int64)
        self.__actions = np.zeros(capacity, dtype=np.int64)
        self.__rewards = np.zeros(capacity)
        self.__terminals = np.zeros(capacity, dtype=bool)
        self.__head = 0
        self.__size = 0
        self.pushed = 0

    def __len__(self) -> int:
        return self.__size

    def push(self, transition: Transition) -> None:
        k = self.__head
        self.__states[k] = transition.state
        self.__next_states[k] = transition.next_state
        self.__decisions[k] = transition.decision
        self.__actions[k] = transition.action
        self.__rewards[k] = transition.reward
        self.__terminals[k] = transition.terminal
        self.__head = (k + 1) % self.capacity
        self.__size = min(self.__size + 1, self.capacity)
        self.pushed += 1

    def _order(self) -> np.ndarray:
        start = self.__head if self.__size == self.capacity else 0
        return (start + np.arange(self.__size)) % self.capacity

    def transitions(self) -> List[Transition]:
        """
        Stored transitions, oldest first.
        """
        return [self._transition(int(k)) for k in self._order()]

    def _transition(self, k: int) -> Transition:
        return Transition(
            state=self.__states[k].copy(),
            decision=int(self.__decisions[k]),
            action=int(self.__actions[k]),
            reward=float(self.__rewards[k]),
            next_state=self.__next_states[k].copy(),
            terminal=bool(self.__terminals[k]),
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """
        Uniform batch, without replacement.
        """
        if self.__size < batch_size:
            raise InsufficientDataError(f"buffer holds {self.__size} transitions, batch needs {batch_size}")
        idx = self._order()[rng.choice(self.__size, size=batch_size, replace=False)]
        return Batch(
            states=self.__states[idx],
            decisions=self.__decisions[idx],
            actions=self.__actions[idx],
            rewards=self.__rewards[idx],
            next_states=self.__next_states[idx],
            terminals=self.__terminals[idx],
        )
