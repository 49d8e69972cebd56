import numpy as np

from coauthor import Agent, FriendshipNetwork, Paper

from .base import Decision, Policy
from .features import Featurizer
from .qnet import QNetwork, act


class StrategicPolicy(Policy):
    """
    Acts on the shared Q-network from the author's own state only. Every
    agent tagged strategic uses the same instance.

    Raise opportunities arrive with the same weekly ``raise_hazard`` as for
    greedy authors; the RAISE head is only consulted on an opportunity.
    """

    tag = "strategic"

    def __init__(self, qnet: QNetwork, featurizer: Featurizer, rng: np.random.Generator,
                 epsilon: float = 0.0, recorder=None, raise_hazard: float = 1.0) -> None:
        if not 0.0 <= raise_hazard <= 1.0:
            raise ValueError(f"raise_hazard must lie in [0, 1], got {raise_hazard}")
        self.qnet = qnet
        self.featurizer = featurizer
        self.epsilon = epsilon
        self.recorder = recorder
        self.raise_hazard = raise_hazard
        self.__rng = rng

    def decide_raise(self, agent: Agent, paper: Paper, net: FriendshipNetwork) -> bool:
        if paper.position(agent.id) < 2:
            return False
        if self.__rng.random() >= self.raise_hazard:
            return False
        return self.__decide(agent, paper, net, Decision.RAISE)

    def decide_respond(self, agent: Agent, paper: Paper, issuer: int, demand: int,
                       net: FriendshipNetwork) -> bool:
        return self.__decide(agent, paper, net, Decision.AGREE)

    def decide_pull(self, agent: Agent, paper: Paper, demand: int, net: FriendshipNetwork) -> bool:
        return self.__decide(agent, paper, net, Decision.PULL)

    def __decide(self, agent: Agent, paper: Paper, net: FriendshipNetwork, decision: Decision) -> bool:
        state = self.featurizer(agent, paper, net)
        action = act(self.qnet, state, decision, self.epsilon, self.__rng)
        if self.recorder is not None:
            self.recorder.record(agent, paper, net, decision, action, state=state)
        return action == 1
