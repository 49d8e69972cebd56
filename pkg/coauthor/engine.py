import logging
from typing import Dict, Iterable, List, Optional

import numpy as np
from pyee.base import EventEmitter

from .collab import POLICY_TAGS, STRATEGIC, Agent, Paper, PaperStatus, create_agents, spawn_papers
from .config import SimulationConfig
from .exceptions import InvalidStateError
from .metrics import MetricsRecord, gini
from .network import FriendshipNetwork, init_network, network_stats, write_snapshot
from .rng import RandomSource
from .ultimatum import DecisionPolicy, TickStreams, weekly_tick

logger = logging.getLogger(__name__)


def assign_strategic(n: int, fraction: float, rng: np.random.Generator) -> List[int]:
    """
    Uniformly chosen ids of ``round(fraction * n)`` strategic agents, sorted.
    """
    count = int(round(fraction * n))
    if count <= 0:
        return []
    return sorted(int(i) for i in rng.choice(n, size=min(count, n), replace=False))


class Simulation(EventEmitter):
    """
    One run of the co-authorship game.

    Emits ``paper_spawned(paper)``, ``ultimatum(event)``, ``vote(record)``,
    ``paper_closed(paper, result)``, ``step(record)`` and, after the last
    step, ``finished(agents)``.
    """

    def __init__(self, config: SimulationConfig, rs: RandomSource,
                 strategic: Iterable[int] = (), run_id: str = "run") -> None:
        super().__init__()
        self.config = config
        self.run_id = run_id
        self.__rs = rs
        utilities = rs.stream("utilities")
        self.streams = TickStreams(
            play=rs.stream("ultimatum-play"),
            contributions=utilities,
            updates=rs.stream("network-updates"),
        )
        self.__formation = rs.stream("clique-formation")
        self.__terms = utilities

        init = rs.stream("network-init")
        self.network: FriendshipNetwork = init_network(config.population, config.network, init)
        self.agents: List[Agent] = create_agents(config.population.n, config.network, init)
        for i in strategic:
            self.agents[i].policy = STRATEGIC

        self.__policies: Dict[str, DecisionPolicy] = {}
        self.__active: Dict[int, Paper] = {}
        self.__next_paper = 0
        self.step_index = 0
        self.completed = 0
        self.terminated = 0
        self.snapshot_dir: Optional[str] = None

    @property
    def spawned(self) -> int:
        return self.__next_paper

    @property
    def active_papers(self) -> List[Paper]:
        return list(self.__active.values())

    def stream(self, name: str) -> np.random.Generator:
        return self.__rs.stream(name)

    def set_policy(self, tag: str, policy: DecisionPolicy) -> None:
        if tag not in POLICY_TAGS:
            raise ValueError(f"unknown policy tag {tag!r}")
        self.__policies[tag] = policy

    def strategic_fraction(self) -> float:
        return sum(1 for a in self.agents if a.policy == STRATEGIC) / len(self.agents)

    def step(self) -> MetricsRecord:
        needed = {a.policy for a in self.agents}
        missing = needed - set(self.__policies)
        if missing:
            raise InvalidStateError("no policy for {}".format(", ".join(sorted(missing))))
        t = self.step_index

        new_papers = spawn_papers(t, self.agents, self.network, self.config, self.__formation,
                                  self.__terms, first_id=self.__next_paper)
        self.__next_paper += len(new_papers)
        for paper in new_papers:
            self.__active[paper.id] = paper
            self.emit("paper_spawned", paper)

        for paper in list(self.__active.values()):
            result = weekly_tick(paper, self.agents, self.__policies, self.network, self.config,
                                 self.streams, t)
            for vote in result.votes:
                self.emit("vote", vote)
            for event in result.events:
                self.emit("ultimatum", event)
            if result.status is not PaperStatus.ACTIVE:
                del self.__active[paper.id]
                if result.status is PaperStatus.COMPLETED:
                    self.completed += 1
                else:
                    self.terminated += 1
                self.emit("paper_closed", paper, result)

        record = self.__record(t)
        if new_papers:
            self.__log_debug("step %d: %d spawned, %d active", t, len(new_papers), record.active)
        snapshot_every = self.config.metrics.snapshot_every
        if self.snapshot_dir is not None and snapshot_every and t % snapshot_every == 0:
            write_snapshot(self.network, f"{self.snapshot_dir}/network_step{t:05d}.csv")
        self.emit("step", record)
        self.step_index += 1
        return record

    def run(self, steps: Optional[int] = None) -> List[MetricsRecord]:
        total = self.config.population.horizon_T if steps is None else steps
        records = [self.step() for _ in range(total)]
        self.emit("finished", self.agents)
        logger.info("%s: %d papers spawned, %d completed, %d terminated", self.run_id,
                    self.spawned, self.completed, self.terminated)
        return records

    def __record(self, t: int) -> MetricsRecord:
        utilities = np.array([a.utility for a in self.agents])
        record = MetricsRecord(
            step=t,
            spawned=self.spawned,
            active=len(self.__active),
            completed=self.completed,
            terminated=self.terminated,
            mean_utility=float(utilities.mean()),
            utility_std=float(utilities.std()),
            gini=gini(utilities) if utilities.sum() > 0 else None,
        )
        if t % self.config.metrics.network_every == 0:
            diag = network_stats(self.network, self.config.metrics.path_length_sources)
            record.clustering = diag.clustering
            record.components = diag.components
            record.density = diag.density
            record.avg_path_length = diag.avg_path_length
        return record

    def __log_debug(self, msg: str, *args) -> None:
        logger.debug(f"Simulation(%s) {msg}", self.run_id, *args)

