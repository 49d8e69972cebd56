from abc import ABCMeta, abstractmethod
from enum import IntEnum

from coauthor import Agent, FriendshipNetwork, Paper


class Decision(IntEnum):
    """
    Decision type; selects the Q-network head. Action 1 is the active choice
    (raise, agree, insist), action 0 the passive one.
    """

    RAISE = 0
    AGREE = 1
    PULL = 2


class Policy(metaclass=ABCMeta):
    """
    An author's ultimatum behavior, plugged into a
    :class:`~coauthor.engine.Simulation` under a policy tag.
    """

    tag = "policy"

    @abstractmethod
    def decide_raise(self, agent: Agent, paper: Paper, net: FriendshipNetwork) -> bool:
        """
        Whether ``agent`` raises an ultimatum on ``paper`` this week.
        """

    @abstractmethod
    def decide_respond(self, agent: Agent, paper: Paper, issuer: int, demand: int,
                       net: FriendshipNetwork) -> bool:
        """
        Whether ``agent`` accepts ``issuer`` moving to position ``demand``.
        """

    @abstractmethod
    def decide_pull(self, agent: Agent, paper: Paper, demand: int, net: FriendshipNetwork) -> bool:
        """
        After a refusal: True to insist and destroy the paper, False to pull back.
        """
