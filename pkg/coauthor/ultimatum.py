import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Protocol, Sequence

import numpy as np

from .collab import Agent, Paper, PaperStatus, UltimatumState, advance_week
from .config import GreedyParams, SimulationConfig
from .events import Outcome, UltimatumEvent, VoteRecord
from .exceptions import InvalidAccessError, InvalidStateError
from .network import FriendshipNetwork, apply_destruction, apply_success, apply_withdraw

logger = logging.getLogger(__name__)


class DecisionPolicy(Protocol):
    """
    What the ultimatum game asks of an author's policy.
    """

    def decide_raise(self, agent: Agent, paper: Paper, net: FriendshipNetwork) -> bool:
        ...

    def decide_respond(self, agent: Agent, paper: Paper, issuer: int, demand: int,
                       net: FriendshipNetwork) -> bool:
        ...

    def decide_pull(self, agent: Agent, paper: Paper, demand: int, net: FriendshipNetwork) -> bool:
        """
        True to insist (destroying the paper), False to pull back.
        """
        ...


@dataclass
class TickStreams:
    play: np.random.Generator
    "Poll order of eligible issuers."
    contributions: np.random.Generator
    updates: np.random.Generator
    "Weights of edges created by completed papers."


@dataclass
class TickResult:
    status: PaperStatus
    events: List[UltimatumEvent] = field(default_factory=list)
    votes: List[VoteRecord] = field(default_factory=list)
    payoffs: Dict[int, float] = field(default_factory=dict)
    "Discounted utility credited to each author of a completed paper."
    losses: Dict[int, float] = field(default_factory=dict)
    "Invested contribution lost by each author of a destroyed paper."


def position_utility(eta: float, xi: float, j: int) -> float:
    if j < 1 or int(j) != j:
        raise ValueError(f"position must be an integer >= 1, got {j}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if xi <= 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    return (1.0 - eta) / (j + xi)


def paper_payoff(u0: float, u1: float, completion_step: float, rho: float) -> float:
    if completion_step < 0:
        raise ValueError(f"completion step must be >= 0, got {completion_step}")
    return u0 * u1 / math.pow(1.0 + rho, completion_step)


def author_utility(paper: Paper, agent: int, j: int) -> float:
    terms = paper.terms[agent]
    return position_utility(terms.eta, terms.xi, j)


def myopic_gain(paper: Paper, issuer: int, j_prime: int) -> float:
    j = paper.position(issuer)
    if j_prime > j:
        raise ValueError(f"demanded position {j_prime} is worse than current {j}")
    return paper.terms[issuer].u0 * (author_utility(paper, issuer, j_prime) - author_utility(paper, issuer, j))


def is_displaced(position: int, j: int, j_prime: int) -> bool:
    return j_prime <= position < j


def displacement_cost(paper: Paper, agent: int) -> float:
    """
    Utility ``agent`` loses by moving one position down.
    """
    j = paper.position(agent)
    return paper.terms[agent].u0 * (author_utility(paper, agent, j) - author_utility(paper, agent, j + 1))


def escalation_loss(paper: Paper, agent: int, greedy: GreedyParams, p_insist: float) -> float:
    """
    Expected loss of invested work if ``agent`` refuses and the issuer insists.
    """
    return p_insist * greedy.lambda_loss * paper.contribution(agent) * paper.terms[agent].u0


def predicted_acceptance(paper: Paper, issuer: int, j_prime: int, greedy: GreedyParams) -> float:
    """
    Share of responders that accept under the deterministic greedy responder
    rule at the prior insist probability.
    """
    j = paper.position(issuer)
    responders = [a for a in paper.authors if a != issuer]
    accepting = 0
    for r in responders:
        if not is_displaced(paper.position(r), j, j_prime) or \
                displacement_cost(paper, r) < escalation_loss(paper, r, greedy, greedy.p_insist):
            accepting += 1
    return accepting / len(responders)


def choose_demand(paper: Paper, issuer: int, greedy: GreedyParams) -> int:
    j = paper.position(issuer)
    if j < 2:
        raise InvalidAccessError(f"agent {issuer} is already first author of paper {paper.id}")
    best, best_value = j - 1, -math.inf
    # smaller jumps first, so ties keep the smaller jump
    for j_prime in range(j - 1, 0, -1):
        value = predicted_acceptance(paper, issuer, j_prime, greedy) * myopic_gain(paper, issuer, j_prime)
        if value > best_value:
            best, best_value = j_prime, value
    return best


def reorder_authors(authors: Sequence[int], j: int, j_prime: int) -> List[int]:
    """
    Move the author at position ``j`` to ``j_prime``; the occupants of
    ``j_prime..j-1`` shift one position down.
    """
    order = list(authors)
    issuer = order.pop(j - 1)
    order.insert(j_prime - 1, issuer)
    return order


def _close(paper: Paper, agents: Sequence[Agent], status: PaperStatus, step: int) -> None:
    paper.status = status
    paper.end_step = step
    for a in paper.authors:
        agents[a].active_papers -= 1


def _complete(paper: Paper, agents: Sequence[Agent], net: FriendshipNetwork,
              config: SimulationConfig, streams: TickStreams, step: int, result: TickResult) -> None:
    periods = step / config.utility.discount_period
    for j, a in enumerate(paper.authors, start=1):
        terms = paper.terms[a]
        payoff = paper_payoff(terms.u0, position_utility(terms.eta, terms.xi, j), periods, config.utility.rho)
        result.payoffs[a] = payoff
        agents[a].utility += payoff
        agents[a].raw_utility += payoff
        agents[a].papers_completed += 1
    apply_success(net, paper.authors, config.reputation, streams.updates)
    _close(paper, agents, PaperStatus.COMPLETED, step)
    result.status = PaperStatus.COMPLETED


def _resolve(paper: Paper, issuer: int, agents: Sequence[Agent], policies: Mapping[str, DecisionPolicy],
             net: FriendshipNetwork, config: SimulationConfig, step: int, result: TickResult) -> None:
    j = paper.position(issuer)
    j_prime = choose_demand(paper, issuer, config.greedy)
    paper.ultimatum, paper.issuer, paper.demand = UltimatumState.PENDING, issuer, j_prime
    agents[issuer].n_raise += 1

    votes: Dict[int, bool] = {}
    # votes are collected before any of them is applied
    for r in paper.authors:
        if r == issuer:
            continue
        responder = agents[r]
        accepted = bool(policies[responder.policy].decide_respond(responder, paper, issuer, j_prime, net))
        votes[r] = accepted
        if accepted:
            responder.n_agree += 1
        else:
            responder.n_refuse += 1
        result.votes.append(VoteRecord(
            paper_id=paper.id, step=step, responder_id=r, responder_policy=responder.policy,
            gap=j - j_prime, displaced=is_displaced(paper.position(r), j, j_prime), accepted=accepted,
        ))

    if all(votes.values()):
        paper.authors = reorder_authors(paper.authors, j, j_prime)
        outcome = Outcome.ACCEPTED
    else:
        paper.ultimatum = UltimatumState.POST_REJECTION
        owner = agents[issuer]
        if policies[owner.policy].decide_pull(owner, paper, j_prime, net):
            owner.n_insist += 1
            owner.n_destr += 1
            outcome = Outcome.TERMINATED
            apply_destruction(net, issuer, paper.authors, paper.contributions, config.reputation)
            for a in paper.authors:
                lost = paper.contributions[a]
                result.losses[a] = lost
                agents[a].raw_utility -= config.drl.lambda_destr * lost
            _close(paper, agents, PaperStatus.TERMINATED, step)
            result.status = PaperStatus.TERMINATED
        else:
            owner.n_pull += 1
            outcome = Outcome.WITHDRAWN
            apply_withdraw(net, issuer, paper.authors, config.reputation)

    result.events.append(UltimatumEvent(
        paper_id=paper.id, step=step, week=paper.week, duration=paper.duration, issuer_id=issuer,
        issuer_policy=agents[issuer].policy, from_pos=j, to_pos=j_prime, outcome=outcome, votes=votes,
    ))
    paper.ultimatum, paper.issuer, paper.demand = UltimatumState.NONE, None, None


def weekly_tick(paper: Paper, agents: Sequence[Agent], policies: Mapping[str, DecisionPolicy],
                net: FriendshipNetwork, config: SimulationConfig, streams: TickStreams,
                step: int) -> TickResult:
    """
    One week of one paper: contributions, at most one ultimatum, and
    completion once the scheduled duration is reached.
    """
    if paper.status is not PaperStatus.ACTIVE:
        raise InvalidStateError(f"paper {paper.id} is {paper.status.value}")
    advance_week(paper, config.collab, streams.contributions)
    result = TickResult(status=PaperStatus.ACTIVE)

    if paper.week < paper.duration:
        eligible = paper.authors[1:]
        for k in streams.play.permutation(len(eligible)):
            candidate = agents[eligible[k]]
            if policies[candidate.policy].decide_raise(candidate, paper, net):
                _resolve(paper, candidate.id, agents, policies, net, config, step, result)
                break

    if paper.status is PaperStatus.ACTIVE and paper.week >= paper.duration:
        _complete(paper, agents, net, config, streams, step, result)
    return result
