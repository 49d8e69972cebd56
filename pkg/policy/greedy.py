import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from coauthor import Agent, FriendshipNetwork, GreedyParams, Paper
from coauthor.exceptions import InvalidAccessError
from coauthor.ultimatum import (
    author_utility,
    choose_demand,
    displacement_cost,
    is_displaced,
    myopic_gain,
    predicted_acceptance,
)

from .base import Decision, Policy

logger = logging.getLogger(__name__)


class Role(Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"
    POST_REJECTION = "post-rejection"


@dataclass(frozen=True)
class GreedyDecisionContext:
    """
    What a greedy author looks at when deciding.
    """

    paper: Paper
    agent: int
    role: Role
    issuer: Optional[int] = None
    "Issuer of the pending ultimatum; None for initiators."
    demand: Optional[int] = None
    "Demanded position j'; None for initiators."

    def __post_init__(self) -> None:
        if self.agent not in self.paper:
            raise InvalidAccessError(f"agent {self.agent} is not an author of paper {self.paper.id}")
        if self.role is not Role.INITIATOR and (self.issuer is None or self.demand is None):
            raise ValueError(f"{self.role.value} context needs an issuer and a demand")

    @property
    def position(self) -> int:
        return self.paper.position(self.agent)

    @property
    def displaced(self) -> bool:
        if self.role is not Role.RESPONDER:
            return False
        return is_displaced(self.position, self.paper.position(self.issuer), self.demand)


def _contribution_at_stake(ctx: GreedyDecisionContext, params: GreedyParams) -> float:
    """
    Expected loss of invested work if the paper is destroyed, in utility units.
    """
    paper = ctx.paper
    u0 = paper.terms[ctx.agent].u0
    return params.lambda_loss * paper.contribution(ctx.agent) * u0 * author_utility(paper, ctx.agent, ctx.position)


def greedy_raise(ctx: GreedyDecisionContext, params: GreedyParams) -> bool:
    """
    Raise iff the acceptance-weighted gain outweighs the expected loss on
    the refusal path, where the issuer itself insists with ``p_commit``.
    """
    if ctx.role is not Role.INITIATOR:
        raise ValueError(f"greedy_raise needs an initiator context, got {ctx.role.value}")
    if ctx.position < 2:
        return False
    demand = choose_demand(ctx.paper, ctx.agent, params)
    acceptance = predicted_acceptance(ctx.paper, ctx.agent, demand, params)
    gain = myopic_gain(ctx.paper, ctx.agent, demand)
    loss = params.p_commit * _contribution_at_stake(ctx, params)
    return acceptance * gain - (1.0 - acceptance) * loss > 0.0


def greedy_accept_probability(ctx: GreedyDecisionContext, params: GreedyParams) -> float:
    """
    Probability that a greedy responder accepts.

    The responder's belief about the issuer insisting is spread uniformly
    over ``[0, 2 p_insist]``; it accepts when its displacement cost is below
    the escalation loss at that belief. Undisplaced responders always accept.
    """
    if ctx.role is not Role.RESPONDER:
        raise ValueError(f"greedy_respond needs a responder context, got {ctx.role.value}")
    if not ctx.displaced:
        return 1.0
    cost = displacement_cost(ctx.paper, ctx.agent)
    scale = 2.0 * params.p_insist * params.lambda_loss * ctx.paper.contribution(ctx.agent) * \
        ctx.paper.terms[ctx.agent].u0
    if scale <= 0.0:
        return 0.0
    return float(np.clip(1.0 - cost / scale, 0.0, 1.0))


def greedy_respond(ctx: GreedyDecisionContext, params: GreedyParams, rng: np.random.Generator) -> bool:
    return bool(rng.random() < greedy_accept_probability(ctx, params))


def greedy_pull(ctx: GreedyDecisionContext, params: GreedyParams, rng: np.random.Generator) -> bool:
    """
    True to insist. Insisting needs a commitment draw below ``p_commit`` and a
    demanded gain larger than the issuer's own work at stake.
    """
    if ctx.role is not Role.POST_REJECTION:
        raise ValueError(f"greedy_pull needs a post-rejection context, got {ctx.role.value}")
    if ctx.issuer != ctx.agent:
        raise ValueError(f"agent {ctx.agent} did not issue the ultimatum")
    committed = rng.random() < params.p_commit
    if not committed:
        return False
    return myopic_gain(ctx.paper, ctx.agent, ctx.demand) > _contribution_at_stake(ctx, params)


class GreedyPolicy(Policy):
    """
    Myopic single-paper behavior. When a recorder is given, decisions are
    also stored as transitions for the shared replay buffer.
    """

    tag = "greedy"

    def __init__(self, params: GreedyParams, rng: np.random.Generator, recorder=None) -> None:
        self.params = params
        self.recorder = recorder
        self.__rng = rng

    def decide_raise(self, agent: Agent, paper: Paper, net: FriendshipNetwork) -> bool:
        if paper.position(agent.id) < 2:
            return False
        if self.__rng.random() >= self.params.raise_hazard:
            return False
        decision = greedy_raise(GreedyDecisionContext(paper, agent.id, Role.INITIATOR), self.params)
        self.__record(agent, paper, net, Decision.RAISE, decision)
        return decision

    def decide_respond(self, agent: Agent, paper: Paper, issuer: int, demand: int,
                       net: FriendshipNetwork) -> bool:
        ctx = GreedyDecisionContext(paper, agent.id, Role.RESPONDER, issuer=issuer, demand=demand)
        decision = greedy_respond(ctx, self.params, self.__rng)
        self.__record(agent, paper, net, Decision.AGREE, decision)
        return decision

    def decide_pull(self, agent: Agent, paper: Paper, demand: int, net: FriendshipNetwork) -> bool:
        ctx = GreedyDecisionContext(paper, agent.id, Role.POST_REJECTION, issuer=agent.id, demand=demand)
        decision = greedy_pull(ctx, self.params, self.__rng)
        self.__record(agent, paper, net, Decision.PULL, decision)
        return decision

    def __record(self, agent: Agent, paper: Paper, net: FriendshipNetwork, decision: Decision,
                 action: bool) -> None:
        if self.recorder is not None:
            self.recorder.record(agent, paper, net, decision, int(action))
