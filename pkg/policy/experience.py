import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np
from pyee.base import EventEmitter

from coauthor import Agent, FriendshipNetwork, Paper, SimulationConfig
from coauthor.ultimatum import TickResult, paper_payoff, position_utility

from .base import Decision
from .features import Featurizer
from .replay import ReplayBuffer, Transition

logger = logging.getLogger(__name__)


class RewardKind(Enum):
    INTERMEDIATE = "intermediate"
    COMPLETION = "completion"
    DESTRUCTION = "destruction"


@dataclass(frozen=True)
class RewardContext:
    kind: RewardKind = RewardKind.INTERMEDIATE
    u0: float = 0.0
    u1: float = 0.0
    "Position utility at the author's final position."
    completion_step: float = 0.0
    "Completion time in discount periods."
    rho: float = 0.0
    contribution: float = 0.0
    "Work the author had invested in a destroyed paper."
    weighted_degree_before: float = 0.0
    weighted_degree_after: float = 0.0


def compute_reward(ctx: RewardContext, lambda_destr: float = 1.0, lambda_deg: float = 0.0) -> float:
    reward = 0.0
    if ctx.kind is RewardKind.COMPLETION:
        reward = paper_payoff(ctx.u0 / 100.0, ctx.u1, ctx.completion_step, ctx.rho)
    elif ctx.kind is RewardKind.DESTRUCTION:
        reward = -lambda_destr * ctx.contribution
    return reward + lambda_deg * (ctx.weighted_degree_after - ctx.weighted_degree_before)


@dataclass
class _Pending:
    state: np.ndarray
    decision: Decision
    action: int
    weighted_degree: float
    reward: float = 0.0


class ExperienceRecorder:
    """
    Turns per-agent decisions into transitions. A decision stays pending
    until the same agent decides again, on any paper; rewards earned in
    between are folded into it.
    """

    def __init__(self, buffer: ReplayBuffer, featurizer: Featurizer, config: SimulationConfig) -> None:
        self.buffer = buffer
        self.featurizer = featurizer
        self.config = config
        self.recorded = 0
        self.__pending: Dict[int, _Pending] = {}

    def attach(self, emitter: EventEmitter) -> "ExperienceRecorder":
        emitter.add_listener("paper_closed", self._on_paper_closed)
        return self

    @property
    def pending(self) -> int:
        return len(self.__pending)

    def record(self, agent: Agent, paper: Paper, net: FriendshipNetwork, decision: Decision,
               action: int, state: Optional[np.ndarray] = None) -> None:
        if state is None:
            state = self.featurizer(agent, paper, net)
        wdeg = net.weighted_degree(agent.id)
        previous = self.__pending.get(agent.id)
        if previous is not None:
            self.__finish(previous, state, wdeg, terminal=False)
        self.__pending[agent.id] = _Pending(state=state, decision=decision, action=action,
                                            weighted_degree=wdeg)
        self.recorded += 1

    def add_reward(self, agent_id: int, reward: float) -> None:
        pending = self.__pending.get(agent_id)
        if pending is not None:
            pending.reward += reward

    def _on_paper_closed(self, paper: Paper, result: TickResult) -> None:
        drl, utility = self.config.drl, self.config.utility
        for j, a in enumerate(paper.authors, start=1):
            if a in result.payoffs:
                terms = paper.terms[a]
                ctx = RewardContext(
                    kind=RewardKind.COMPLETION,
                    u0=terms.u0,
                    u1=position_utility(terms.eta, terms.xi, j),
                    completion_step=paper.end_step / utility.discount_period,
                    rho=utility.rho,
                )
                self.add_reward(a, compute_reward(ctx, drl.lambda_destr))
        # every member of a destroyed paper loses its invested work
        for a, lost in result.losses.items():
            ctx = RewardContext(kind=RewardKind.DESTRUCTION, contribution=lost)
            self.add_reward(a, compute_reward(ctx, drl.lambda_destr))

    def flush(self, net: FriendshipNetwork) -> int:
        """
        Close every pending decision as terminal. Returns how many were closed.
        """
        count = len(self.__pending)
        for agent_id, pending in self.__pending.items():
            self.__finish(pending, np.zeros_like(pending.state), net.weighted_degree(agent_id), terminal=True)
        self.__pending.clear()
        return count

    def __finish(self, pending: _Pending, next_state: np.ndarray, weighted_degree: float,
                 terminal: bool) -> None:
        shaping = compute_reward(
            RewardContext(weighted_degree_before=pending.weighted_degree, weighted_degree_after=weighted_degree),
            lambda_deg=self.config.drl.lambda_deg,
        )
        self.buffer.push(Transition(
            state=pending.state,
            decision=int(pending.decision),
            action=pending.action,
            reward=pending.reward + shaping,
            next_state=next_state,
            terminal=terminal,
        ))
