import math
from typing import Tuple

import numpy as np

from coauthor import Agent, FriendshipNetwork, Paper, SimulationConfig
from coauthor.exceptions import InvalidAccessError
from coauthor.metrics import gini
from coauthor.ultimatum import choose_demand, myopic_gain

PAPER_FEATURES: Tuple[str, ...] = (
    "clique_size",
    "clique_size_norm",
    "relative_contribution",
    "contribution_gini",
    "position",
    "position_norm",
    "is_first",
    "is_last",
    "u0",
    "eta",
    "xi",
    "progress",
    "remaining",
    "myopic_gain",
)
AGENT_FEATURES: Tuple[str, ...] = (
    "utility",
    "active_papers",
    "raised",
    "agreed",
    "refused",
    "pulled",
    "insisted",
    "destroyed",
)
NETWORK_FEATURES: Tuple[str, ...] = (
    "degree",
    "weighted_degree",
    "coauthor_weight",
    "two_hop_strength",
    "component_fraction",
)
STATE_DIM = len(PAPER_FEATURES) + len(AGENT_FEATURES) + len(NETWORK_FEATURES)


class Featurizer:
    """
    Builds an author's local state on a paper: a paper block, a career
    block and a network block, concatenated in that order.
    """

    def __init__(self, config: SimulationConfig, rng: np.random.Generator) -> None:
        drl = config.drl
        if (drl.paper_dim, drl.agent_dim, drl.network_dim) != \
                (len(PAPER_FEATURES), len(AGENT_FEATURES), len(NETWORK_FEATURES)):
            raise ValueError("feature block sizes {}/{}/{} do not match the state layout".format(
                drl.paper_dim, drl.agent_dim, drl.network_dim))
        self.config = config
        self.__rng = rng

    def __call__(self, agent: Agent, paper: Paper, net: FriendshipNetwork) -> np.ndarray:
        if agent.id not in paper:
            raise InvalidAccessError(f"agent {agent.id} is not an author of paper {paper.id}")
        state = np.concatenate([
            self.paper_block(agent, paper),
            self.agent_block(agent),
            self.network_block(agent, paper, net),
        ])
        return state

    def paper_block(self, agent: Agent, paper: Paper) -> np.ndarray:
        k = paper.size
        j = paper.position(agent.id)
        terms = paper.terms[agent.id]
        contribs = np.array([paper.contributions[a] for a in paper.authors])
        total = contribs.sum()
        relative = paper.contributions[agent.id] / total if total > 0 else 1.0 / k
        inequality = gini(contribs) if total > 0 else 0.0
        gain = 0.0
        if j >= 2:
            gain = myopic_gain(paper, agent.id, choose_demand(paper, agent.id, self.config.greedy)) / 100.0
        return np.array([
            k,
            k / self.config.collab.K_max,
            relative,
            inequality,
            j,
            j / k,
            1.0 if j == 1 else 0.0,
            1.0 if j == k else 0.0,
            terms.u0 / 100.0,
            terms.eta,
            terms.xi,
            paper.week / paper.duration,
            (paper.duration - paper.week) / paper.duration,
            gain,
        ], dtype=float)

    def agent_block(self, agent: Agent) -> np.ndarray:
        counts = (agent.active_papers, agent.n_raise, agent.n_agree, agent.n_refuse,
                  agent.n_pull, agent.n_insist, agent.n_destr)
        return np.array([agent.utility / 100.0] + [math.log1p(c) for c in counts], dtype=float)

    def network_block(self, agent: Agent, paper: Paper, net: FriendshipNetwork) -> np.ndarray:
        i = agent.id
        coauthors = [a for a in paper.authors if a != i]
        coauthor_weight = float(np.mean([net.weight(i, a) for a in coauthors])) if coauthors else 0.0
        return np.array([
            math.log1p(net.degree(i)),
            math.log1p(net.weighted_degree(i)),
            coauthor_weight,
            self.two_hop_strength(i, net),
            net.component_size(i) / net.n,
        ], dtype=float)

    def two_hop_strength(self, i: int, net: FriendshipNetwork) -> float:
        """
        Mean path strength from ``i`` over a sample of its two-hop ego network.
        """
        strengths = net.strengths_from(i, max_hops=2)
        if not strengths:
            return 0.0
        ego = sorted(strengths)
        cap = self.config.drl.ego_sample_cap
        if len(ego) > cap:
            picks = self.__rng.choice(len(ego), size=cap, replace=False)
            ego = [ego[k] for k in picks]
        return float(np.mean([strengths[v][0] for v in ego]))
