import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from coauthor import GREEDY, STRATEGIC, DrlParams, RandomSource, Simulation, SimulationConfig
from coauthor.exceptions import InsufficientDataError
from coauthor.metrics import MetricsRecord, linear_trend, moving_average

from .checkpoint import save_checkpoint
from .features import Featurizer
from .experience import ExperienceRecorder
from .greedy import GreedyPolicy
from .qnet import Adam, QNetwork, double_dqn_targets
from .replay import ReplayBuffer
from .strategic import StrategicPolicy

logger = logging.getLogger(__name__)

CURVES_CSV = "curves.csv"
TRAINING_SUMMARY_JSON = "training_summary.json"
FINAL_CHECKPOINT = "checkpoint.bin"
TREND_WINDOW = 15


def epsilon_at(episode: int, drl: DrlParams) -> float:
    return max(drl.eps_final, drl.eps0 * drl.eps_decay ** episode)


def conversion_batch(n: int, drl: DrlParams) -> int:
    """
    Greedy agents converted per conversion round, spread so the strategic
    share reaches ``conversion_target`` after that share of the episodes.
    """
    convertible = int(round(drl.conversion_target * n))
    rounds = drl.conversion_target * drl.episodes / drl.conversion_every
    if convertible <= 0 or rounds <= 0:
        return 0
    return math.ceil(convertible / rounds)


def is_conversion_episode(episode: int, drl: DrlParams) -> bool:
    return episode > 0 and episode % drl.conversion_every == 0


class DoubleDQN:
    """
    Online network, frozen target copy and optimizer of the single learner.
    """

    def __init__(self, drl: DrlParams, rng: np.random.Generator,
                 online: Optional[QNetwork] = None) -> None:
        self.drl = drl
        self.online = online if online is not None else QNetwork.from_params(drl, rng)
        self.target = self.online.copy()
        self.optimizer = Adam.from_params(self.online.params, drl)
        self.updates = 0

    def sync_target(self) -> None:
        self.target.load_state(self.online)

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> float:
        if len(buffer) < self.drl.batch_size:
            raise InsufficientDataError(
                f"buffer holds {len(buffer)} transitions, batch needs {self.drl.batch_size}")
        batch = buffer.sample(self.drl.batch_size, rng)
        online_next, _ = self.online.forward(batch.next_states)
        target_next, _ = self.target.forward(batch.next_states)
        targets = double_dqn_targets(batch.rewards, batch.terminals, batch.decisions, online_next,
                                     target_next, self.drl.gamma_rl)
        loss, grads = self.online.loss_and_grads(batch.states, batch.decisions, batch.actions, targets)
        self.optimizer.step(self.online.params, grads)
        self.updates += 1
        if self.updates % self.drl.target_update_every == 0:
            self.sync_target()
        return loss


@dataclass
class EpisodeStats:
    episode: int
    mean_utility: float
    papers_completed: int
    papers_destroyed: int
    completion_rate: float
    "Completed papers per spawned paper."
    epsilon: float
    strategic_fraction: float
    loss: Optional[float] = None
    transitions: int = 0

    COLUMNS = ("episode", "mean_utility", "papers_completed", "papers_destroyed", "completion_rate",
               "epsilon", "strategic_fraction")

    def to_row(self) -> List[object]:
        return [getattr(self, name) for name in self.COLUMNS]


@dataclass
class TrainingResult:
    curves: List[EpisodeStats] = field(default_factory=list)
    checkpoint: Optional[str] = None
    strategic: List[int] = field(default_factory=list)


class Trainer:
    """
    Runs training episodes. Strategic agents act on the online network, which
    keeps learning during the episode from the shared replay buffer.
    """

    def __init__(self, config: SimulationConfig, rs: RandomSource, out_dir: Optional[str] = None) -> None:
        self.config = config
        self.out_dir = out_dir
        self.__rs = rs
        self.__sampling = rs.stream("training-sampling")
        self.learner = DoubleDQN(config.drl, self.__sampling)
        self.buffer = ReplayBuffer(config.drl.replay_capacity)
        self.strategic: List[int] = []
        self.__losses: List[float] = []

    def convert(self, episode: int) -> List[int]:
        """
        Promote a batch of greedy agents to strategic on conversion episodes.
        """
        drl, n = self.config.drl, self.config.population.n
        if not is_conversion_episode(episode, drl):
            return []
        cap = int(round(drl.conversion_target * n))
        k = min(conversion_batch(n, drl), cap - len(self.strategic))
        if k <= 0:
            return []
        taken = set(self.strategic)
        pool = [i for i in range(n) if i not in taken]
        picks = sorted(int(pool[p]) for p in self.__sampling.choice(len(pool), size=k, replace=False))
        self.strategic = sorted(taken.union(picks))
        self.__log_debug("episode %d converted %d agents, %d strategic", episode, k, len(self.strategic))
        return picks

    def run_episode(self, episode: int) -> EpisodeStats:
        drl = self.config.drl
        self.convert(episode)
        epsilon = epsilon_at(episode, drl)
        sim = Simulation(self.config, self.__rs.spawn(episode), strategic=self.strategic,
                         run_id=f"episode-{episode}")
        exploration = sim.stream("policy-exploration")
        featurizer = Featurizer(self.config, exploration)
        recorder = ExperienceRecorder(self.buffer, featurizer, self.config).attach(sim)
        sim.set_policy(GREEDY, GreedyPolicy(self.config.greedy, sim.streams.play,
                                            recorder if drl.record_greedy_transitions else None))
        sim.set_policy(STRATEGIC, StrategicPolicy(self.learner.online, featurizer, exploration,
                                                  epsilon=epsilon, recorder=recorder,
                                                  raise_hazard=self.config.greedy.raise_hazard))
        sim.on("step", self._on_step)

        self.__losses = []
        pushed = self.buffer.pushed
        sim.run()
        recorder.flush(sim.network)

        spawned = sim.spawned
        stats = EpisodeStats(
            episode=episode,
            mean_utility=float(np.mean([a.utility for a in sim.agents])),
            papers_completed=sim.completed,
            papers_destroyed=sim.terminated,
            completion_rate=sim.completed / spawned if spawned else 0.0,
            epsilon=epsilon,
            strategic_fraction=sim.strategic_fraction(),
            loss=float(np.mean(self.__losses)) if self.__losses else None,
            transitions=self.buffer.pushed - pushed,
        )
        logger.info("episode %d: eps=%.3f strategic=%.2f completed=%d destroyed=%d rate=%.3f loss=%s",
                    episode, epsilon, stats.strategic_fraction, stats.papers_completed,
                    stats.papers_destroyed, stats.completion_rate,
                    "-" if stats.loss is None else f"{stats.loss:.4g}")
        return stats

    def _on_step(self, record: MetricsRecord) -> None:
        drl = self.config.drl
        if record.step % drl.train_every:
            return
        if len(self.buffer) < max(drl.batch_size, drl.learning_starts):
            return
        for _ in range(drl.updates_per_train):
            self.__losses.append(self.learner.train_step(self.buffer, self.__sampling))

    def run(self, episodes: Optional[int] = None) -> TrainingResult:
        drl = self.config.drl
        total = drl.episodes if episodes is None else episodes
        result = TrainingResult()
        for episode in range(total):
            result.curves.append(self.run_episode(episode))
            if self.out_dir and drl.checkpoint_every and (episode + 1) % drl.checkpoint_every == 0:
                save_checkpoint(self.learner.online,
                                os.path.join(self.out_dir, f"checkpoint_ep{episode + 1:04d}.bin"))
        result.strategic = list(self.strategic)
        if self.out_dir:
            result.checkpoint = os.path.join(self.out_dir, FINAL_CHECKPOINT)
            save_checkpoint(self.learner.online, result.checkpoint)
            write_curves(result.curves, os.path.join(self.out_dir, CURVES_CSV))
            write_training_summary(result.curves, os.path.join(self.out_dir, TRAINING_SUMMARY_JSON))
        return result

    def __log_debug(self, msg: str, *args) -> None:
        logger.debug(f"Trainer(%s) {msg}", self.__rs, *args)


def write_curves(curves: List[EpisodeStats], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(EpisodeStats.COLUMNS)
        writer.writerows(s.to_row() for s in curves)


def training_summary(curves: List[EpisodeStats]) -> Dict[str, Dict[str, object]]:
    """
    Linear trend against the episode index and moving average of every
    reported series.
    """
    summary: Dict[str, Dict[str, object]] = {}
    for name in ("mean_utility", "papers_completed", "papers_destroyed", "completion_rate"):
        series = [float(getattr(s, name)) for s in curves]
        entry: Dict[str, object] = {"moving_average": moving_average(series, TREND_WINDOW)}
        try:
            entry.update(asdict(linear_trend(series)))
        except InsufficientDataError:
            entry.update(slope=None, intercept=None, r_squared=None)
        summary[name] = entry
    return summary


def write_training_summary(curves: List[EpisodeStats], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fd:
        json.dump(training_summary(curves), fd, indent=2, sort_keys=True)


def run_training(config: SimulationConfig, out_dir: Optional[str] = None) -> TrainingResult:
    return Trainer(config, RandomSource(config.seed), out_dir).run()
