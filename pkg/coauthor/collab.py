import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import CollabParams, NetworkParams, SimulationConfig, UtilityParams
from .exceptions import InvalidAccessError, InvalidStateError, RecruitmentAbandoned
from .network import FriendshipNetwork

logger = logging.getLogger(__name__)

GREEDY = "greedy"
STRATEGIC = "strategic"
POLICY_TAGS = (GREEDY, STRATEGIC)

# recruitment samples allowed per requested clique member
RECRUIT_ATTEMPT_FACTOR = 10


class PaperStatus(Enum):
    ACTIVE = "active"
    COMPLETED = "completed"
    TERMINATED = "terminated"


class UltimatumState(Enum):
    NONE = 0
    PENDING = 1
    POST_REJECTION = 2


@dataclass
class Agent:
    id: int
    exploration: float
    "Probability e_i of exploring the network instead of the direct neighborhood."
    policy: str = GREEDY
    "Policy tag, ``greedy`` or ``strategic``."
    active_papers: int = 0
    papers_joined: int = 0
    papers_completed: int = 0
    n_raise: int = 0
    n_agree: int = 0
    n_refuse: int = 0
    n_pull: int = 0
    "Ultimatums withdrawn after a refusal."
    n_insist: int = 0
    n_destr: int = 0
    "Papers destroyed by this agent's insistence."
    utility: float = 0.0
    "Cumulative discounted utility of completed papers (U_total)."
    raw_utility: float = 0.0
    "U_total minus destruction penalties."


@dataclass(frozen=True)
class AuthorTerms:
    u0: float
    eta: float
    xi: float


@dataclass
class Paper:
    id: int
    authors: List[int]
    "Author ids in position order, first author first."
    start_step: int
    duration: int
    "Scheduled duration T_m in weeks."
    terms: Dict[int, AuthorTerms]
    contributions: Dict[int, float] = field(default_factory=dict)
    week: int = 0
    status: PaperStatus = PaperStatus.ACTIVE
    ultimatum: UltimatumState = UltimatumState.NONE
    issuer: Optional[int] = None
    demand: Optional[int] = None
    end_step: Optional[int] = None

    def __post_init__(self) -> None:
        for a in self.authors:
            self.contributions.setdefault(a, 0.0)

    def __contains__(self, agent: int) -> bool:
        return agent in self.terms

    @property
    def size(self) -> int:
        return len(self.authors)

    def position(self, agent: int) -> int:
        """
        1-based authorship position of ``agent``.
        """
        try:
            return self.authors.index(agent) + 1
        except ValueError:
            raise InvalidAccessError(f"agent {agent} is not an author of paper {self.id}")

    def contribution(self, agent: int) -> float:
        if agent not in self.terms:
            raise InvalidAccessError(f"agent {agent} is not an author of paper {self.id}")
        return self.contributions[agent]


def create_agents(n: int, net: NetworkParams, rng: np.random.Generator) -> List[Agent]:
    exploration = np.clip(rng.normal(net.exploration_mean, net.exploration_std, size=n), 0.0, 1.0)
    return [Agent(id=i, exploration=float(exploration[i])) for i in range(n)]


def project_clique_size(x: int, k_max: int) -> int:
    return min(max(int(x), 2), k_max)


def sample_clique_size(lambda_K: float, k_max: int, rng: np.random.Generator) -> int:
    if k_max < 2:
        raise ValueError(f"K_max must be >= 2, got {k_max}")
    return project_clique_size(rng.poisson(lambda_K), k_max)


def recruit_clique(seed_agent: int, target_size: int, net: FriendshipNetwork,
                   agents: Sequence[Agent], capacity: int, rng: np.random.Generator) -> List[int]:
    """
    Grow a clique from ``seed_agent`` by a walk over the friendship network.

    The current focal author explores (with its probability e) among every
    reachable agent with spare capacity, weighted by path strength, or else
    exploits its direct neighbors weighted by edge weight. A focal author
    without candidates is dropped and the walk backtracks to the previous
    member. Returns the members in recruitment order; raises
    :class:`RecruitmentAbandoned` when not even a pair can be formed.
    """
    if target_size < 2:
        raise ValueError(f"target size must be >= 2, got {target_size}")
    members = [seed_agent]
    chosen = {seed_agent}
    trail = [seed_agent]
    attempts = 0
    while len(members) < target_size and trail and attempts < RECRUIT_ATTEMPT_FACTOR * target_size:
        attempts += 1
        focal = trail[-1]
        if rng.random() < agents[focal].exploration:
            strengths = net.strengths_from(focal)
            # zero strengths cannot be drawn
            candidates = [v for v in sorted(strengths)
                          if v not in chosen and agents[v].active_papers < capacity and strengths[v][0] > 0.0]
            weights = [strengths[v][0] for v in candidates]
        else:
            candidates = [v for v in sorted(net.neighbors(focal))
                          if v not in chosen and agents[v].active_papers < capacity]
            weights = [net.weight(focal, v) for v in candidates]
        if not candidates:
            trail.pop()
            continue
        p = np.asarray(weights, dtype=float)
        pick = candidates[int(rng.choice(len(candidates), p=p / p.sum()))]
        members.append(pick)
        chosen.add(pick)
        trail.append(pick)
    if len(members) < 2:
        raise RecruitmentAbandoned(f"no collaborator reachable from agent {seed_agent}")
    if len(members) < target_size:
        logger.debug("clique of agent %d truncated to %d/%d", seed_agent, len(members), target_size)
    return members


def draw_terms(utility: UtilityParams, rng: np.random.Generator) -> AuthorTerms:
    return AuthorTerms(
        u0=float(rng.uniform(utility.u0_min, utility.u0_max)),
        eta=float(rng.uniform(utility.eta_min, utility.eta_max)),
        xi=utility.xi,
    )


def spawn_papers(step: int, agents: Sequence[Agent], net: FriendshipNetwork,
                 config: SimulationConfig, rng: np.random.Generator,
                 utility_rng: np.random.Generator, first_id: int = 0) -> List[Paper]:
    """
    Form this step's new papers. The number of formation attempts is
    Binomial(idle-capable agents, spawn rate); abandoned formations are dropped.
    """
    capacity = config.population.max_concurrent_papers_per_agent
    rate = config.population.paper_spawn_rate_per_agent
    collab = config.collab
    idle = [a.id for a in agents if a.active_papers < capacity]
    if not idle or rate <= 0.0:
        return []
    papers: List[Paper] = []
    for _ in range(int(rng.binomial(len(idle), rate))):
        idle = [i for i in idle if agents[i].active_papers < capacity]
        if not idle:
            break
        seed = idle[int(rng.integers(len(idle)))]
        size = sample_clique_size(collab.lambda_K, collab.K_max, rng)
        try:
            members = recruit_clique(seed, size, net, agents, capacity, rng)
        except RecruitmentAbandoned as exc:
            logger.debug("step %d: %s", step, exc)
            continue
        duration = int(rng.integers(collab.duration_min, collab.duration_max + 1))
        paper = Paper(
            id=first_id + len(papers),
            authors=list(members),
            start_step=step,
            duration=duration,
            terms={a: draw_terms(config.utility, utility_rng) for a in members},
        )
        for a in members:
            agents[a].active_papers += 1
            agents[a].papers_joined += 1
        papers.append(paper)
    return papers


def advance_week(paper: Paper, collab: CollabParams, rng: np.random.Generator) -> Dict[int, float]:
    """
    Add one week of contributions. Every week hands out 1/T_m in total, so a
    paper run to full duration sums to 1.
    """
    if paper.status is not PaperStatus.ACTIVE:
        raise InvalidStateError(f"paper {paper.id} is {paper.status.value}")
    if paper.week >= paper.duration:
        raise InvalidStateError(f"paper {paper.id} already ran {paper.week}/{paper.duration} weeks")
    k = paper.size
    if collab.contribution_mode == "dirichlet":
        shares = rng.dirichlet(np.full(k, collab.dirichlet_concentration))
        deltas = {a: float(s) / paper.duration for a, s in zip(paper.authors, shares)}
    else:
        beta = 1.0 / (k * paper.duration)
        deltas = {a: beta for a in paper.authors}
    for a, d in deltas.items():
        paper.contributions[a] += d
    paper.week += 1
    return deltas
